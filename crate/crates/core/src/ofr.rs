//! Orthogonal forward selection of NARX terms for classification.
//!
//! At each step every remaining candidate column is normalized,
//! orthogonalized against the already chosen directions, and scored by the
//! K-fold cross-validated accuracy of a one-vs-all logistic model fitted on
//! that residual alone. The best candidate joins the basis. Candidates whose
//! residual has squared norm below `1e-10` carry no new information and are
//! dropped for the rest of the run.
//!
//! After each step the model on the selected *original* columns is
//! cross-validated on the same folds; the trace records both numbers.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::FoldAssignment;
use crate::error::{NarxError, Result};
use crate::glm::{err_criterion, FitOptions};
use crate::multiclass::{cv_fold_accuracies, with_ones, InterceptPolicy};
use crate::regressors::{CandidateDictionary, Term};

/// Squared residual norm below which a candidate is considered spanned by
/// the current basis.
pub const REJECT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scorer {
    /// Mean K-fold one-vs-all logistic accuracy.
    #[default]
    CvAccuracy,
    /// Mean over classes of the error reduction ratio against the class
    /// indicator vector. Cheap, but blind to nonlinear class structure.
    Err,
}

impl std::str::FromStr for Scorer {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cv-accuracy" => Ok(Scorer::CvAccuracy),
            "err" => Ok(Scorer::Err),
            other => Err(format!("unknown scorer {other:?} (expected cv-accuracy or err)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreOptions {
    pub n_classes: usize,
    pub fit: FitOptions,
    /// Fit candidate models on `[1, w]` instead of `w` alone.
    pub intercept: bool,
    pub scorer: Scorer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    /// Maximum number of terms `k`.
    pub max_terms: usize,
    pub fit: FitOptions,
    /// Intercept handling of the cumulative model on the selected terms.
    pub intercept: InterceptPolicy,
    /// Whether candidate scoring fits carry an intercept.
    pub scoring_intercept: bool,
    pub scorer: Scorer,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            max_terms: 10,
            fit: FitOptions::default(),
            intercept: InterceptPolicy::Implicit,
            scoring_intercept: true,
            scorer: Scorer::CvAccuracy,
        }
    }
}

/// Orthonormal directions of the selected terms, in selection order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OrthogonalBasis {
    pub q_columns: Vec<Vec<f64>>,
    pub source_terms: Vec<Term>,
}

impl OrthogonalBasis {
    pub fn len(&self) -> usize {
        self.q_columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_columns.is_empty()
    }

    pub fn push(&mut self, q: Vec<f64>, term: Term) {
        self.q_columns.push(q);
        self.source_terms.push(term);
    }

    /// Largest `|q_i · q_j|` over `i != j`.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            for j in 0..i {
                worst = worst.max(dot(&self.q_columns[i], &self.q_columns[j]).abs());
            }
        }
        worst
    }

    /// Largest `| ‖q_i‖ − 1 |`.
    pub fn max_norm_error(&self) -> f64 {
        self.q_columns
            .iter()
            .map(|q| (dot(q, q).sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn normalize_column(v: &[f64]) -> Result<Vec<f64>> {
    let norm = dot(v, v).sqrt();
    if !norm.is_finite() || norm <= 0.0 {
        return Err(NarxError::ZeroNorm);
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

/// Classical Gram-Schmidt residual `v − Σ (q_i·v) q_i`, applied twice.
pub fn orthogonalize_against(v: &[f64], basis: &OrthogonalBasis) -> Vec<f64> {
    let mut r = v.to_vec();
    for _pass in 0..2 {
        let coefs: Vec<f64> = basis.q_columns.iter().map(|q| dot(q, &r)).collect();
        for (q, c) in basis.q_columns.iter().zip(coefs) {
            r.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= c * qi);
        }
    }
    r
}

/// Score of one orthogonalized candidate column.
pub fn score_candidate(w: &[f64], labels: &[usize], folds: &FoldAssignment, opts: &ScoreOptions) -> Result<f64> {
    if w.len() != labels.len() {
        return Err(NarxError::DimensionMismatch {
            expected: labels.len(),
            actual: w.len(),
        });
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(NarxError::NonFinite("candidate column"));
    }
    match opts.scorer {
        Scorer::CvAccuracy => {
            let col = DMatrix::from_column_slice(w.len(), 1, w);
            let design = if opts.intercept { with_ones(&col) } else { col };
            let accs = cv_fold_accuracies(&design, labels, opts.n_classes, folds, &opts.fit)?;
            Ok(accs.iter().sum::<f64>() / accs.len() as f64)
        }
        Scorer::Err => {
            let mut total = 0.0;
            for class in 0..opts.n_classes {
                let indicator: Vec<f64> = labels.iter().map(|&y| f64::from(u8::from(y == class))).collect();
                total += err_criterion(w, &indicator)?;
            }
            Ok(total / opts.n_classes as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub term: Term,
    /// Column of the term in the candidate dictionary.
    pub dictionary_index: usize,
    /// Score of the orthogonalized residual that won this step.
    pub score: f64,
    /// CV accuracy of the model on all terms selected so far.
    pub cv_mean_accuracy: f64,
    pub cv_max_accuracy: f64,
    pub cv_fold_accuracies: Vec<f64>,
    /// Basis orthogonality after this step.
    pub basis_max_off_diagonal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    NearZeroNorm,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedTerm {
    pub term: Term,
    pub reason: RejectReason,
    /// Step at which the term was dropped; 0 for dictionary-level duplicates.
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub steps: Vec<SelectionStep>,
    pub rejected_terms: Vec<RejectedTerm>,
    pub n_candidates: usize,
    pub folds: usize,
}

impl SelectionTrace {
    pub fn terms(&self) -> Vec<Term> {
        self.steps.iter().map(|s| s.term.clone()).collect()
    }

    /// `step,term,score,cv_mean,cv_max`, one row per step.
    pub fn to_curve_csv(&self) -> String {
        let mut out = String::from("step,term,score,cv_mean,cv_max\n");
        for (i, s) in self.steps.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                i + 1,
                s.term,
                s.score,
                s.cv_mean_accuracy,
                s.cv_max_accuracy
            );
        }
        out
    }
}

enum Candidate {
    Rejected,
    Scored { w: Vec<f64>, score: f64 },
}

/// Greedy forward selection of up to `config.max_terms` dictionary terms.
///
/// `labels` and `folds` must index the dictionary's rows. Stops early once
/// every remaining candidate has been rejected.
pub fn select_terms(
    dictionary: &CandidateDictionary,
    labels: &[usize],
    n_classes: usize,
    folds: &FoldAssignment,
    config: &SelectionConfig,
) -> Result<(SelectionTrace, OrthogonalBasis)> {
    if config.max_terms < 1 {
        return Err(NarxError::InvalidArgument("max_terms must be at least 1".into()));
    }
    if dictionary.is_empty() {
        return Err(NarxError::InvalidArgument("empty candidate dictionary".into()));
    }
    let n = dictionary.n_rows();
    if labels.len() != n || folds.fold_of.len() != n {
        return Err(NarxError::DimensionMismatch {
            expected: n,
            actual: labels.len(),
        });
    }
    let score_opts = ScoreOptions {
        n_classes,
        fit: config.fit,
        intercept: config.scoring_intercept,
        scorer: config.scorer,
    };

    let mut remaining: Vec<usize> = (0..dictionary.len()).collect();
    let mut basis = OrthogonalBasis::default();
    let mut selected: Vec<usize> = Vec::new();
    let mut trace = SelectionTrace {
        steps: Vec::new(),
        rejected_terms: dictionary
            .duplicates
            .iter()
            .map(|t| RejectedTerm {
                term: t.clone(),
                reason: RejectReason::Duplicate,
                step: 0,
            })
            .collect(),
        n_candidates: dictionary.len(),
        folds: folds.k,
    };

    while selected.len() < config.max_terms && !remaining.is_empty() {
        let step_no = selected.len() + 1;
        let evaluated: Vec<Result<Candidate>> = remaining
            .par_iter()
            .map(|&j| {
                let Ok(unit) = normalize_column(dictionary.column(j)) else {
                    return Ok(Candidate::Rejected);
                };
                let r = orthogonalize_against(&unit, &basis);
                if dot(&r, &r) < REJECT_TOL {
                    return Ok(Candidate::Rejected);
                }
                let w = normalize_column(&r)?;
                let score = score_candidate(&w, labels, folds, &score_opts)?;
                Ok(Candidate::Scored { w, score })
            })
            .collect();

        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        let mut survivors = Vec::with_capacity(remaining.len());
        for (&j, cand) in remaining.iter().zip(evaluated) {
            match cand? {
                Candidate::Rejected => trace.rejected_terms.push(RejectedTerm {
                    term: dictionary.terms[j].clone(),
                    reason: RejectReason::NearZeroNorm,
                    step: step_no,
                }),
                Candidate::Scored { w, score } => {
                    survivors.push(j);
                    // `remaining` is ascending, so strict > keeps the lowest index on ties
                    if best.as_ref().is_none_or(|(_, s, _)| score > *s) {
                        best = Some((j, score, w));
                    }
                }
            }
        }
        let Some((j, score, w)) = best else {
            if selected.is_empty() {
                return Err(NarxError::AllCandidatesRejected);
            }
            break;
        };
        survivors.retain(|&i| i != j);
        remaining = survivors;
        selected.push(j);
        basis.push(w, dictionary.terms[j].clone());

        let terms: Vec<Term> = selected.iter().map(|&i| dictionary.terms[i].clone()).collect();
        let design = selected_design(dictionary, &selected, config.intercept.needs_ones(&terms));
        let accs = cv_fold_accuracies(&design, labels, n_classes, folds, &config.fit)?;
        trace.steps.push(SelectionStep {
            term: dictionary.terms[j].clone(),
            dictionary_index: j,
            score,
            cv_mean_accuracy: accs.iter().sum::<f64>() / accs.len() as f64,
            cv_max_accuracy: accs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            cv_fold_accuracies: accs,
            basis_max_off_diagonal: basis.max_off_diagonal(),
        });
    }
    Ok((trace, basis))
}

fn selected_design(dictionary: &CandidateDictionary, selected: &[usize], ones: bool) -> DMatrix<f64> {
    let cols = dictionary.matrix.select_columns(selected);
    if ones {
        with_ones(&cols)
    } else {
        cols
    }
}

//! One-vs-all logistic classification over a shared set of NARX terms.
//!
//! Class `v` gets its own binary model `P(v | x) = logistic(θ_v · φ(x))`;
//! a sample is assigned to the class with the highest probability. The
//! probabilities are not renormalized across classes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FoldAssignment, NormalizationParams};
use crate::error::{NarxError, Result};
use crate::glm::{fit_logistic, predict_probability, FitOptions, LogisticFit};
use crate::regressors::{realize_terms, DictionaryConfig, Term};

/// Whether a model without the `Constant` term receives an intercept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterceptPolicy {
    /// Add a column of ones unless `Constant` is one of the terms, in which
    /// case that term is the intercept.
    #[default]
    Implicit,
    /// Use the terms exactly as given.
    None,
}

impl InterceptPolicy {
    pub fn needs_ones(self, terms: &[Term]) -> bool {
        self == InterceptPolicy::Implicit && !terms.iter().any(Term::is_constant)
    }
}

impl std::str::FromStr for InterceptPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "implicit" => Ok(InterceptPolicy::Implicit),
            "none" => Ok(InterceptPolicy::None),
            other => Err(format!("unknown intercept policy {other:?} (expected implicit or none)")),
        }
    }
}

/// Prepends a column of ones.
pub fn with_ones(columns: &DMatrix<f64>) -> DMatrix<f64> {
    columns.clone().insert_column(0, 1.0)
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Fits one binary model per class on a fixed design matrix.
pub fn fit_ova_columns(
    columns: &DMatrix<f64>,
    labels: &[usize],
    n_classes: usize,
    opts: &FitOptions,
) -> Result<Vec<LogisticFit>> {
    (0..n_classes)
        .map(|class| {
            let targets: Vec<bool> = labels.iter().map(|&y| y == class).collect();
            fit_logistic(columns, &targets, opts).map_err(|e| NarxError::ClassFit {
                class,
                source: Box::new(e),
            })
        })
        .collect()
}

/// `N × C` matrix of per-class probabilities.
pub fn ova_probabilities(fits: &[LogisticFit], columns: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(columns.nrows(), fits.len());
    for (c, fit) in fits.iter().enumerate() {
        let p = predict_probability(fit, columns)?;
        out.column_mut(c).copy_from_slice(&p);
    }
    Ok(out)
}

pub fn argmax_rows(probabilities: &DMatrix<f64>) -> Vec<usize> {
    let mut row = vec![0.0; probabilities.ncols()];
    (0..probabilities.nrows())
        .map(|i| {
            for (c, slot) in row.iter_mut().enumerate() {
                *slot = probabilities[(i, c)];
            }
            argmax(&row)
        })
        .collect()
}

/// Held-out accuracy of a one-vs-all model on each fold of `folds`.
///
/// Fails if a training partition lacks a class entirely.
pub fn cv_fold_accuracies(
    columns: &DMatrix<f64>,
    labels: &[usize],
    n_classes: usize,
    folds: &FoldAssignment,
    opts: &FitOptions,
) -> Result<Vec<f64>> {
    if folds.fold_of.len() != labels.len() || columns.nrows() != labels.len() {
        return Err(NarxError::DimensionMismatch {
            expected: labels.len(),
            actual: folds.fold_of.len().min(columns.nrows()),
        });
    }
    let mut accs = Vec::with_capacity(folds.k);
    for (fold, (train, test)) in folds.partitions().into_iter().enumerate() {
        let train_labels: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let mut present = vec![false; n_classes];
        train_labels.iter().for_each(|&y| present[y] = true);
        if let Some(class) = present.iter().position(|p| !p) {
            return Err(NarxError::FoldMissingClass { fold, class });
        }
        let fits = fit_ova_columns(&columns.select_rows(&train), &train_labels, n_classes, opts)?;
        let probs = ova_probabilities(&fits, &columns.select_rows(&test))?;
        let predicted = argmax_rows(&probs);
        let hits = predicted
            .iter()
            .zip(&test)
            .filter(|(p, &i)| **p == labels[i])
            .count();
        accs.push(hits as f64 / test.len() as f64);
    }
    Ok(accs)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OvaConfig {
    pub dictionary: DictionaryConfig,
    pub fit: FitOptions,
    pub intercept: InterceptPolicy,
}

/// A fitted one-vs-all model that scores raw (unnormalized) features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvaModel {
    pub class_names: Vec<String>,
    pub dictionary_config: DictionaryConfig,
    pub normalization: NormalizationParams,
    pub terms: Vec<Term>,
    /// A column of ones precedes the term columns.
    pub implicit_intercept: bool,
    /// Per-class intercepts; all zero when `implicit_intercept` is false.
    pub class_intercepts: Vec<f64>,
    /// Per-class coefficients aligned with `terms`.
    pub class_coefficients: Vec<Vec<f64>>,
}

/// Fits the model on raw `data`, normalizing it with `normalization` first.
pub fn fit_ova(
    data: &Dataset,
    normalization: &NormalizationParams,
    terms: &[Term],
    config: &OvaConfig,
) -> Result<OvaModel> {
    if data.n_classes() < 2 {
        return Err(NarxError::TooFewClasses(data.n_classes()));
    }
    if terms.is_empty() {
        return Err(NarxError::InvalidArgument("no terms to fit".into()));
    }
    config.dictionary.validate()?;
    let z = normalization.transform(&data.features)?;
    let realized = realize_terms(&z, Some(&data.labels), terms, &config.dictionary)?;
    let implicit = config.intercept.needs_ones(terms);
    let design = if implicit { with_ones(&realized) } else { realized };
    let skip = config.dictionary.dropped_rows();
    let targets = &data.labels[skip..];
    let fits = fit_ova_columns(&design, targets, data.n_classes(), &config.fit)?;

    let offset = usize::from(implicit);
    Ok(OvaModel {
        class_names: data.class_names.clone(),
        dictionary_config: config.dictionary.clone(),
        normalization: normalization.clone(),
        terms: terms.to_vec(),
        implicit_intercept: implicit,
        class_intercepts: fits
            .iter()
            .map(|f| if implicit { f.coefficients[0] } else { 0.0 })
            .collect(),
        class_coefficients: fits.iter().map(|f| f.coefficients[offset..].to_vec()).collect(),
    })
}

impl OvaModel {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_features(&self) -> usize {
        self.normalization.dim()
    }

    /// Checks the invariants a deserialized model must satisfy.
    pub fn validate(&self) -> Result<()> {
        let c = self.n_classes();
        if c < 2 {
            return Err(NarxError::TooFewClasses(c));
        }
        if self.class_coefficients.len() != c || self.class_intercepts.len() != c {
            return Err(NarxError::DimensionMismatch {
                expected: c,
                actual: self.class_coefficients.len(),
            });
        }
        for coefs in &self.class_coefficients {
            if coefs.len() != self.terms.len() {
                return Err(NarxError::DimensionMismatch {
                    expected: self.terms.len(),
                    actual: coefs.len(),
                });
            }
        }
        let all = self.class_coefficients.iter().flatten().chain(&self.class_intercepts);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(NarxError::NonFinite("model coefficients"));
        }
        let d = self.n_features();
        if self.normalization.std_devs.len() != d || self.normalization.constant.len() != d {
            return Err(NarxError::InvalidArgument("inconsistent normalization vectors".into()));
        }
        if let Some(t) = self.terms.iter().find(|t| t.max_input_index() > d) {
            return Err(NarxError::InvalidArgument(format!("term {t} references a feature beyond {d}")));
        }
        self.dictionary_config.validate()
    }

    fn fits(&self) -> Vec<LogisticFit> {
        self.class_coefficients
            .iter()
            .zip(&self.class_intercepts)
            .map(|(coefs, &b)| {
                let mut all = Vec::with_capacity(coefs.len() + 1);
                if self.implicit_intercept {
                    all.push(b);
                }
                all.extend_from_slice(coefs);
                LogisticFit {
                    coefficients: all,
                    ..LogisticFit::zeros(0)
                }
            })
            .collect()
    }

    /// Per-class probabilities for raw feature rows.
    ///
    /// Models whose terms use output lags need the label history; use
    /// [`OvaModel::predict_proba_with_labels`] for those.
    pub fn predict_proba(&self, raw_features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.proba(raw_features, None)
    }

    pub fn predict_proba_with_labels(&self, raw_features: &DMatrix<f64>, labels: &[usize]) -> Result<DMatrix<f64>> {
        self.proba(raw_features, Some(labels))
    }

    fn proba(&self, raw_features: &DMatrix<f64>, labels: Option<&[usize]>) -> Result<DMatrix<f64>> {
        if raw_features.ncols() != self.n_features() {
            return Err(NarxError::DimensionMismatch {
                expected: self.n_features(),
                actual: raw_features.ncols(),
            });
        }
        if raw_features.iter().any(|v| !v.is_finite()) {
            return Err(NarxError::NonFinite("features"));
        }
        let z = self.normalization.transform(raw_features)?;
        let realized = realize_terms(&z, labels, &self.terms, &self.dictionary_config)?;
        let design = if self.implicit_intercept { with_ones(&realized) } else { realized };
        ova_probabilities(&self.fits(), &design)
    }

    /// Class index per row: the argmax of [`OvaModel::predict_proba`].
    pub fn predict(&self, raw_features: &DMatrix<f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.predict_proba(raw_features)?))
    }

    pub fn predict_with_labels(&self, raw_features: &DMatrix<f64>, labels: &[usize]) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.predict_proba_with_labels(raw_features, labels)?))
    }
}

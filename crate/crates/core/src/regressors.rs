//! Polynomial NARX candidate terms.
//!
//! A term is a monomial over lagged inputs `u_i(k-j)` and, optionally, lagged
//! outputs `y(k-j)`. The full dictionary holds every monomial of degree
//! `0..=l`; with `n` lagged variables it has `(n+l)! / (n! l!)` members.
//!
//! Two realization modes exist. In [`Mode::Static`] the rows are i.i.d.
//! samples and every lag resolves to the current row, so `u1(k-1)` and
//! `u1(k-2)` realize the same column; the dictionary keeps only the lowest-lag
//! copy. In [`Mode::Temporal`] rows form a sequence, lag `j` reads row `k-j`
//! and the first `max_lag` rows are dropped.

use std::collections::HashSet;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{NarxError, Result};

/// Origin of a lagged variable. Inputs are numbered from 1 as in `u1(k-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "SourceRepr", try_from = "SourceRepr")]
pub enum Source {
    Input(usize),
    Output,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SourceRepr {
    Input(usize),
    Output(String),
}

impl From<Source> for SourceRepr {
    fn from(s: Source) -> Self {
        match s {
            Source::Input(i) => SourceRepr::Input(i),
            Source::Output => SourceRepr::Output("y".into()),
        }
    }
}

impl TryFrom<SourceRepr> for Source {
    type Error = String;

    fn try_from(r: SourceRepr) -> std::result::Result<Self, String> {
        match r {
            SourceRepr::Input(0) => Err("input indices start at 1".into()),
            SourceRepr::Input(i) => Ok(Source::Input(i)),
            SourceRepr::Output(s) if s == "y" => Ok(Source::Output),
            SourceRepr::Output(s) => Err(format!("unknown source {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Factor {
    pub source: Source,
    pub lag: usize,
}

impl Factor {
    pub fn input(index: usize, lag: usize) -> Self {
        Factor {
            source: Source::Input(index),
            lag,
        }
    }

    pub fn output(lag: usize) -> Self {
        Factor {
            source: Source::Output,
            lag,
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.source {
            Source::Input(i) => write!(f, "u{}(k-{})", i, self.lag),
            Source::Output => write!(f, "y(k-{})", self.lag),
        }
    }
}

/// A monomial; factors are kept sorted so equal monomials compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "TermRepr", try_from = "TermRepr")]
pub struct Term {
    factors: Vec<Factor>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    factors: Vec<Factor>,
    #[serde(default, skip_deserializing)]
    display: String,
}

impl From<Term> for TermRepr {
    fn from(t: Term) -> Self {
        TermRepr {
            display: t.to_string(),
            factors: t.factors,
        }
    }
}

impl TryFrom<TermRepr> for Term {
    type Error = String;

    fn try_from(r: TermRepr) -> std::result::Result<Self, String> {
        if r.factors.iter().any(|f| f.lag == 0) {
            return Err("lags start at 1".into());
        }
        Ok(Term::new(r.factors))
    }
}

impl Term {
    pub fn new(mut factors: Vec<Factor>) -> Self {
        factors.sort_unstable();
        Term { factors }
    }

    pub fn constant() -> Self {
        Term { factors: Vec::new() }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    pub fn is_constant(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn uses_output(&self) -> bool {
        self.factors.iter().any(|f| f.source == Source::Output)
    }

    pub fn max_input_index(&self) -> usize {
        self.factors
            .iter()
            .filter_map(|f| match f.source {
                Source::Input(i) => Some(i),
                Source::Output => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Distinct input features the term touches (1-based).
    pub fn input_features(&self) -> impl Iterator<Item = usize> + '_ {
        let mut seen = Vec::new();
        self.factors.iter().filter_map(move |f| match f.source {
            Source::Input(i) if !seen.contains(&i) => {
                seen.push(i);
                Some(i)
            }
            _ => None,
        })
    }

    /// The same monomial with every lag collapsed to 1, i.e. what the term
    /// realizes to in static mode.
    fn static_key(&self) -> Term {
        Term::new(
            self.factors
                .iter()
                .map(|f| Factor {
                    source: f.source,
                    lag: 1,
                })
                .collect(),
        )
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("Constant");
        }
        for factor in &self.factors {
            write!(f, "{factor}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Static,
    Temporal,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "static" => Ok(Mode::Static),
            "temporal" => Ok(Mode::Temporal),
            other => Err(format!("unknown mode {other:?} (expected static or temporal)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictionaryConfig {
    /// Maximum monomial degree `l`.
    pub degree: usize,
    /// Maximum input lag `n_u`.
    pub input_lag: usize,
    /// Maximum output lag `n_y`.
    pub output_lag: usize,
    pub mode: Mode,
    pub include_output_lags: bool,
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        DictionaryConfig {
            degree: 2,
            input_lag: 2,
            output_lag: 2,
            mode: Mode::Static,
            include_output_lags: false,
        }
    }
}

impl DictionaryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.degree < 1 {
            return Err(NarxError::InvalidArgument("degree must be at least 1".into()));
        }
        if self.input_lag < 1 {
            return Err(NarxError::InvalidArgument("input lag must be at least 1".into()));
        }
        if self.include_output_lags {
            if self.mode == Mode::Static {
                return Err(NarxError::InvalidArgument(
                    "output lags require temporal mode; in static mode y(k-j) is the current label"
                        .into(),
                ));
            }
            if self.output_lag < 1 {
                return Err(NarxError::InvalidArgument(
                    "output lags requested with n_y = 0".into(),
                ));
            }
        }
        Ok(())
    }

    /// Number of lagged variables `n` before any static-mode collapsing.
    pub fn n_variables(&self, d: usize) -> usize {
        d * self.input_lag + if self.include_output_lags { self.output_lag } else { 0 }
    }

    /// Leading rows consumed by lags. Zero in static mode.
    pub fn dropped_rows(&self) -> usize {
        match self.mode {
            Mode::Static => 0,
            Mode::Temporal if self.include_output_lags => self.input_lag.max(self.output_lag),
            Mode::Temporal => self.input_lag,
        }
    }
}

/// `(n+l)! / (n! l!)`, the number of monomials of degree at most `l` in `n`
/// variables.
pub fn count_candidate_terms(n: usize, l: usize) -> Result<u64> {
    let overflow = || NarxError::CountOverflow { n, l };
    let k = n.min(l) as u128;
    let top = (n as u128).checked_add(l as u128).ok_or_else(overflow)?;
    // C(top, k) accumulated so each partial product is itself a binomial
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc.checked_mul(top - k + i).ok_or_else(overflow)? / i;
    }
    u64::try_from(acc).map_err(|_| overflow())
}

/// Every monomial of degree `0..=l`, ascending by degree and then
/// lexicographically by sorted factor list.
pub fn enumerate_terms(d: usize, config: &DictionaryConfig) -> Vec<Term> {
    let mut vars: Vec<Factor> = Vec::with_capacity(config.n_variables(d));
    for i in 1..=d {
        for j in 1..=config.input_lag {
            vars.push(Factor::input(i, j));
        }
    }
    if config.include_output_lags {
        for j in 1..=config.output_lag {
            vars.push(Factor::output(j));
        }
    }
    vars.sort_unstable();

    let mut terms = vec![Term::constant()];
    for degree in 1..=config.degree {
        let mut idx = vec![0usize; degree];
        if vars.is_empty() {
            break;
        }
        loop {
            terms.push(Term {
                factors: idx.iter().map(|&i| vars[i]).collect(),
            });
            // next non-decreasing index tuple
            let Some(pos) = (0..degree).rev().find(|&p| idx[p] + 1 < vars.len()) else {
                break;
            };
            let v = idx[pos] + 1;
            idx[pos..].iter_mut().for_each(|x| *x = v);
        }
    }
    terms
}

/// A realized candidate set: column `j` of `matrix` holds term `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateDictionary {
    pub terms: Vec<Term>,
    pub matrix: DMatrix<f64>,
    pub config: DictionaryConfig,
    pub dropped_rows: usize,
    /// Terms removed because they realize identically to an earlier term.
    pub duplicates: Vec<Term>,
}

impl CandidateDictionary {
    /// Enumerates, deduplicates (static mode) and realizes the full
    /// dictionary over normalized features.
    pub fn build(
        features: &DMatrix<f64>,
        labels: Option<&[usize]>,
        config: &DictionaryConfig,
    ) -> Result<Self> {
        config.validate()?;
        let all = enumerate_terms(features.ncols(), config);
        let (terms, duplicates) = match config.mode {
            Mode::Temporal => (all, Vec::new()),
            Mode::Static => {
                let mut seen = HashSet::new();
                all.into_iter().partition(|t| seen.insert(t.static_key()))
            }
        };
        let mut dict = realize_dictionary(features, labels, &terms, config)?;
        dict.duplicates = duplicates;
        Ok(dict)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.matrix.nrows();
        &self.matrix.as_slice()[j * n..(j + 1) * n]
    }
}

/// Realizes `terms` as columns over `features` (rows are samples).
///
/// `labels` supplies `y(k-j)` values and is only needed when a term uses
/// output lags.
pub fn realize_dictionary(
    features: &DMatrix<f64>,
    labels: Option<&[usize]>,
    terms: &[Term],
    config: &DictionaryConfig,
) -> Result<CandidateDictionary> {
    let matrix = realize_terms(features, labels, terms, config)?;
    Ok(CandidateDictionary {
        terms: terms.to_vec(),
        matrix,
        config: config.clone(),
        dropped_rows: config.dropped_rows(),
        duplicates: Vec::new(),
    })
}

/// The bare regressor matrix for `terms`; see [`realize_dictionary`].
pub fn realize_terms(
    features: &DMatrix<f64>,
    labels: Option<&[usize]>,
    terms: &[Term],
    config: &DictionaryConfig,
) -> Result<DMatrix<f64>> {
    let d = features.ncols();
    let n = features.nrows();
    let skip = config.dropped_rows();
    if config.mode == Mode::Temporal && n <= skip {
        return Err(NarxError::InvalidArgument(format!(
            "temporal mode needs more than {skip} rows, got {n}"
        )));
    }
    if let Some(l) = labels {
        if l.len() != n {
            return Err(NarxError::DimensionMismatch {
                expected: n,
                actual: l.len(),
            });
        }
    }
    let label_values: Option<Vec<f64>> = labels.map(|l| l.iter().map(|&y| y as f64).collect());
    for t in terms {
        if t.max_input_index() > d {
            return Err(NarxError::DimensionMismatch {
                expected: d,
                actual: t.max_input_index(),
            });
        }
        for f in t.factors() {
            if config.mode == Mode::Temporal && f.lag > skip {
                return Err(NarxError::InvalidArgument(format!(
                    "term {t} has lag {} beyond the configured maximum {skip}",
                    f.lag
                )));
            }
            if f.source == Source::Output {
                if config.mode == Mode::Static {
                    return Err(NarxError::InvalidArgument(format!(
                        "term {t} uses output lags, which static mode does not support"
                    )));
                }
                if label_values.is_none() {
                    return Err(NarxError::LabelsUnavailable { term: t.to_string() });
                }
            }
        }
    }

    let rows = n - skip;
    let mut matrix = DMatrix::from_element(rows, terms.len(), 1.0);
    for (j, t) in terms.iter().enumerate() {
        let mut col = matrix.column_mut(j);
        for f in t.factors() {
            let series: &[f64] = match f.source {
                Source::Input(i) => &features.as_slice()[(i - 1) * n..i * n],
                Source::Output => label_values.as_deref().unwrap_or_default(),
            };
            let offset = match config.mode {
                Mode::Static => 0,
                Mode::Temporal => skip - f.lag,
            };
            for (r, v) in col.iter_mut().enumerate() {
                *v *= series[r + offset];
            }
        }
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(degree: usize, input_lag: usize) -> DictionaryConfig {
        DictionaryConfig {
            degree,
            input_lag,
            ..DictionaryConfig::default()
        }
    }

    fn names(terms: &[Term]) -> Vec<String> {
        terms.iter().map(Term::to_string).collect()
    }

    #[test]
    fn candidate_counts() {
        assert_eq!(count_candidate_terms(0, 3).unwrap(), 1);
        assert_eq!(count_candidate_terms(4, 2).unwrap(), 15);
        // 40 features x 2 lags
        assert_eq!(count_candidate_terms(80, 2).unwrap(), 3321);
        assert_eq!(count_candidate_terms(30, 30).unwrap(), 118_264_581_564_861_424);
        assert!(count_candidate_terms(100, 100).is_err());
    }

    #[test]
    fn enumeration_matches_count_exhaustively() {
        for n in 0..=8 {
            for l in 1..=3 {
                let c = DictionaryConfig {
                    degree: l,
                    input_lag: 1,
                    ..DictionaryConfig::default()
                };
                let terms = enumerate_terms(n, &c);
                assert_eq!(terms.len() as u64, count_candidate_terms(n, l).unwrap(), "n={n} l={l}");
                let unique: HashSet<_> = terms.iter().collect();
                assert_eq!(unique.len(), terms.len());
            }
        }
    }

    #[test]
    fn smallest_dictionaries() {
        assert_eq!(names(&enumerate_terms(1, &cfg(1, 1))), ["Constant", "u1(k-1)"]);
        assert_eq!(
            names(&enumerate_terms(2, &cfg(2, 1))),
            [
                "Constant",
                "u1(k-1)",
                "u2(k-1)",
                "u1(k-1)u1(k-1)",
                "u1(k-1)u2(k-1)",
                "u2(k-1)u2(k-1)"
            ]
        );
        let iris = enumerate_terms(4, &cfg(2, 1));
        assert_eq!(iris.len(), 15);
        assert!(names(&iris).contains(&"u3(k-1)u3(k-1)".to_string()));
    }

    #[test]
    fn output_lags_counted_in_temporal_mode() {
        let c = DictionaryConfig {
            mode: Mode::Temporal,
            include_output_lags: true,
            ..DictionaryConfig::default()
        };
        let terms = enumerate_terms(3, &c);
        assert_eq!(terms.len() as u64, count_candidate_terms(8, 2).unwrap());
        assert!(names(&terms).contains(&"u3(k-2)y(k-1)".to_string()));
        assert!(DictionaryConfig {
            include_output_lags: true,
            ..DictionaryConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn static_mode_collapses_lags() {
        let x = DMatrix::from_fn(5, 4, |i, j| (i + j * 7) as f64 * 0.3);
        let dict = CandidateDictionary::build(&x, None, &DictionaryConfig::default()).unwrap();
        assert_eq!(dict.len(), 15);
        assert_eq!(dict.duplicates.len(), 45 - 15);
        assert!(dict.terms.iter().all(|t| t.factors().iter().all(|f| f.lag == 1)));
        assert_eq!(dict.dropped_rows, 0);
    }

    #[test]
    fn static_realization() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 5.0, 2.0, 6.0]);
        let terms = vec![
            Term::constant(),
            Term::new(vec![Factor::input(2, 1)]),
            Term::new(vec![Factor::input(2, 1), Factor::input(1, 1)]),
        ];
        let d = realize_dictionary(&x, None, &terms, &DictionaryConfig::default()).unwrap();
        assert_eq!(d.column(0), &[1.0, 1.0]);
        assert_eq!(d.column(1), &[5.0, 6.0]);
        assert_eq!(d.column(2), &[5.0, 12.0]);
        assert_eq!(terms[2].to_string(), "u1(k-1)u2(k-1)");
    }

    #[test]
    fn temporal_realization_shifts_rows() {
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let labels = [0, 1, 2, 1];
        let c = DictionaryConfig {
            degree: 2,
            input_lag: 2,
            output_lag: 1,
            mode: Mode::Temporal,
            include_output_lags: true,
        };
        let terms = vec![
            Term::new(vec![Factor::input(1, 1)]),
            Term::new(vec![Factor::input(1, 2)]),
            Term::new(vec![Factor::output(1), Factor::input(1, 2)]),
        ];
        let d = realize_dictionary(&x, Some(&labels), &terms, &c).unwrap();
        assert_eq!(d.dropped_rows, 2);
        assert_eq!(d.column(0), &[2.0, 3.0]);
        assert_eq!(d.column(1), &[1.0, 2.0]);
        assert_eq!(d.column(2), &[1.0, 4.0]);
        assert!(matches!(
            realize_dictionary(&x, None, &terms, &c),
            Err(NarxError::LabelsUnavailable { .. })
        ));
        let short = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        assert!(realize_dictionary(&short, Some(&[0, 1]), &terms, &c).is_err());
    }

    #[test]
    fn out_of_range_source_rejected() {
        let x = DMatrix::from_element(3, 2, 1.0);
        let t = vec![Term::new(vec![Factor::input(3, 1)])];
        assert!(realize_dictionary(&x, None, &t, &DictionaryConfig::default()).is_err());
    }

    #[test]
    fn term_json_shape() {
        let t = Term::new(vec![Factor::input(7, 1), Factor::input(3, 1)]);
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(
            json,
            r#"{"factors":[{"source":3,"lag":1},{"source":7,"lag":1}],"display":"u3(k-1)u7(k-1)"}"#
        );
        let back: Term = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        let y: Term = serde_json::from_str(r#"{"factors":[{"source":"y","lag":2}]}"#).unwrap();
        assert_eq!(y.to_string(), "y(k-2)");
        assert_eq!(serde_json::to_string(&Term::constant()).unwrap(), r#"{"factors":[],"display":"Constant"}"#);
    }

    #[test]
    fn listing_is_stable() {
        let a = names(&enumerate_terms(5, &DictionaryConfig::default()));
        let b = names(&enumerate_terms(5, &DictionaryConfig::default()));
        assert_eq!(a.join("\n").into_bytes(), b.join("\n").into_bytes());
    }

    proptest! {
        #[test]
        fn columns_are_factor_products(
            rows in 1usize..8,
            vals in proptest::collection::vec(-3.0f64..3.0, 24),
        ) {
            let d = 3;
            let x = DMatrix::from_fn(rows, d, |i, j| vals[(i * d + j) % vals.len()]);
            let c = DictionaryConfig { degree: 3, input_lag: 1, ..DictionaryConfig::default() };
            let terms = enumerate_terms(d, &c);
            let dict = realize_dictionary(&x, None, &terms, &c).unwrap();
            for (j, t) in terms.iter().enumerate() {
                for r in 0..rows {
                    let mut naive = 1.0;
                    for f in t.factors() {
                        if let Source::Input(i) = f.source {
                            naive *= x[(r, i - 1)];
                        }
                    }
                    prop_assert_eq!(dict.matrix[(r, j)], naive);
                }
            }
        }
    }
}

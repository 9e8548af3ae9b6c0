//! Labelled tabular data: CSV loading, z-score normalization, stratified
//! train/validation splits and K-fold partitions.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{NarxError, Result};
use crate::rng::{stream_rng, Stream};

/// Feature matrix (rows are samples) plus integer class labels.
///
/// Labels index into `class_names`. Subsets produced by splitting keep the
/// parent's class list, so a label means the same class in every part.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub feature_names: Vec<String>,
}

/// Selects the label column of a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// `last`, a zero-based column index, or a header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("last") {
            Ok(LabelColumn::Last)
        } else if let Ok(i) = s.parse::<usize>() {
            Ok(LabelColumn::Index(i))
        } else {
            Ok(LabelColumn::Name(s.to_string()))
        }
    }
}

impl Dataset {
    /// Builds a dataset and checks its invariants: finite features, labels in
    /// range, at least two classes and every class present.
    pub fn new(
        features: DMatrix<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(NarxError::DimensionMismatch {
                expected: features.nrows(),
                actual: labels.len(),
            });
        }
        if feature_names.len() != features.ncols() {
            return Err(NarxError::DimensionMismatch {
                expected: features.ncols(),
                actual: feature_names.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(NarxError::NonFinite("features"));
        }
        let n_classes = class_names.len();
        if n_classes < 2 {
            return Err(NarxError::TooFewClasses(n_classes));
        }
        let mut seen = vec![false; n_classes];
        for &y in &labels {
            if y >= n_classes {
                return Err(NarxError::InvalidArgument(format!(
                    "label {y} out of range for {n_classes} classes"
                )));
            }
            seen[y] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(NarxError::InvalidArgument(format!(
                "class {:?} has no samples",
                class_names[missing]
            )));
        }
        Ok(Dataset {
            features,
            labels,
            class_names,
            feature_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Rows `indices` in the given order. The class list is inherited.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

/// Reads a headed CSV file. Labels are encoded in order of first appearance.
pub fn load_csv(path: impl AsRef<Path>, label_column: &LabelColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| NarxError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, label_column)
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(reader: R, label_column: &LabelColumn) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let label_idx = match label_column {
        LabelColumn::Last => headers
            .len()
            .checked_sub(1)
            .ok_or_else(|| NarxError::LabelColumn("last".into()))?,
        LabelColumn::Index(i) if *i < headers.len() => *i,
        LabelColumn::Index(i) => return Err(NarxError::LabelColumn(i.to_string())),
        LabelColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| NarxError::LabelColumn(name.clone()))?,
    };
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let d = feature_names.len();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based data row, not counting the header
        let row = r + 1;
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                if cell.is_empty() {
                    return Err(NarxError::MissingValue {
                        row,
                        column: headers[j].clone(),
                    });
                }
                let next = class_names.len();
                let id = *class_index.entry(cell.to_string()).or_insert_with(|| {
                    class_names.push(cell.to_string());
                    next
                });
                labels.push(id);
            } else {
                if cell.is_empty() {
                    return Err(NarxError::MissingValue {
                        row,
                        column: headers[j].clone(),
                    });
                }
                let v: f64 = cell
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| NarxError::ParseCell {
                        row,
                        column: headers[j].clone(),
                        value: cell.to_string(),
                    })?;
                values.push(v);
            }
        }
    }
    if class_names.len() < 2 {
        return Err(NarxError::TooFewClasses(class_names.len()));
    }
    let features = DMatrix::from_row_slice(labels.len(), d, &values);
    Dataset::new(features, labels, class_names, feature_names)
}

/// Per-column moments used for z-scoring.
///
/// Standard deviations use the population denominator N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
    /// Columns with zero spread; these pass through unchanged.
    pub constant: Vec<bool>,
}

impl NormalizationParams {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn identity(d: usize) -> Self {
        NormalizationParams {
            means: vec![0.0; d],
            std_devs: vec![1.0; d],
            constant: vec![true; d],
        }
    }

    /// z-scores a raw feature matrix in place of a copy.
    pub fn transform(&self, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if features.ncols() != self.dim() {
            return Err(NarxError::DimensionMismatch {
                expected: self.dim(),
                actual: features.ncols(),
            });
        }
        let mut out = features.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            if self.constant[j] {
                continue;
            }
            let (m, s) = (self.means[j], self.std_devs[j]);
            col.iter_mut().for_each(|v| *v = (*v - m) / s);
        }
        Ok(out)
    }
}

pub fn fit_normalization(train: &Dataset) -> NormalizationParams {
    fit_normalization_matrix(&train.features)
}

pub fn fit_normalization_matrix(features: &DMatrix<f64>) -> NormalizationParams {
    let n = features.nrows() as f64;
    let mut means = Vec::with_capacity(features.ncols());
    let mut std_devs = Vec::with_capacity(features.ncols());
    let mut constant = Vec::with_capacity(features.ncols());
    for col in features.column_iter() {
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        let is_const = sd.is_nan() || sd <= 1e-12 * mean.abs().max(1.0);
        means.push(mean);
        std_devs.push(if is_const { 1.0 } else { sd });
        constant.push(is_const);
    }
    NormalizationParams {
        means,
        std_devs,
        constant,
    }
}

pub fn apply_normalization(data: &Dataset, params: &NormalizationParams) -> Result<Dataset> {
    Ok(Dataset {
        features: params.transform(&data.features)?,
        ..data.clone()
    })
}

/// Row indices of a train/validation split, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified random split: each class contributes `round(fraction * n_c)`
/// rows to the training part.
pub fn split_indices(labels: &[usize], n_classes: usize, train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(NarxError::InvalidArgument(format!(
            "train fraction {train_fraction} not in (0, 1)"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Split);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for class in 0..n_classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let n_train = (train_fraction * idx.len() as f64).round() as usize;
        if n_train == 0 {
            return Err(NarxError::InvalidArgument(format!(
                "train fraction {train_fraction} leaves class {class} empty in the training part"
            )));
        }
        train.extend_from_slice(&idx[..n_train]);
        validation.extend_from_slice(&idx[n_train..]);
    }
    if validation.is_empty() {
        return Err(NarxError::InvalidArgument(format!(
            "train fraction {train_fraction} leaves the validation part empty"
        )));
    }
    train.sort_unstable();
    validation.sort_unstable();
    Ok(Split { train, validation })
}

pub fn split_train_validation(
    data: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let split = split_indices(&data.labels, data.n_classes(), train_fraction, seed)?;
    Ok((data.subset(&split.train), data.subset(&split.validation)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl FoldAssignment {
    /// Rows held out in `fold`.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    /// Rows used for fitting when `fold` is held out.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }

    /// `(train, test)` index pairs for every fold, in fold order.
    pub fn partitions(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        (0..self.k)
            .map(|f| (self.train_indices(f), self.test_indices(f)))
            .collect()
    }
}

/// Assigns every row to one of `k` folds.
///
/// Stratified assignment deals each class's shuffled rows round-robin,
/// continuing the rotation from where the previous class stopped, so fold
/// sizes differ by at most one both per class and overall.
pub fn make_folds(labels: &[usize], k: usize, seed: u64, stratified: bool) -> Result<FoldAssignment> {
    let n = labels.len();
    if k < 2 {
        return Err(NarxError::InvalidArgument(format!("k = {k} folds; need at least 2")));
    }
    if k > n {
        return Err(NarxError::InvalidArgument(format!("k = {k} folds exceeds {n} samples")));
    }
    let mut rng = stream_rng(seed, Stream::Folds);
    let mut fold_of = vec![0; n];
    if stratified {
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut next = 0;
        for class in 0..n_classes {
            let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
            idx.shuffle(&mut rng);
            for i in idx {
                fold_of[i] = next % k;
                next += 1;
            }
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            fold_of[i] = pos % k;
        }
    }
    Ok(FoldAssignment {
        fold_of,
        k,
        seed,
        stratified,
    })
}

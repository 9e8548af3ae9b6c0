//! Brute-force k-nearest-neighbour baseline.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FoldAssignment};
use crate::error::{NarxError, Result};
use crate::glm::accuracy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Metric {
    Euclidean,
    Minkowski { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k_neighbors: usize,
    pub metric: Metric,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            k_neighbors: 10,
            metric: Metric::Euclidean,
        }
    }
}

impl KnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors < 1 {
            return Err(NarxError::InvalidArgument("k_neighbors must be at least 1".into()));
        }
        if let Metric::Minkowski { p } = self.metric {
            if !p.is_finite() || p < 1.0 {
                return Err(NarxError::InvalidArgument(format!("minkowski exponent must be >= 1, got {p}")));
            }
        }
        Ok(())
    }
}

impl Metric {
    /// Monotone surrogate of the distance: the p-th power sum, without the
    /// final root. Ranking by it equals ranking by the distance itself.
    fn power_sum(&self, a: impl Iterator<Item = f64>) -> f64 {
        match *self {
            Metric::Euclidean | Metric::Minkowski { p: 2.0 } => a.map(|d| d * d).sum(),
            Metric::Minkowski { p: 1.0 } => a.map(f64::abs).sum(),
            Metric::Minkowski { p } => a.map(|d| d.abs().powf(p)).sum(),
        }
    }
}

/// Predicts a class for each row of `query` by majority vote among the
/// `k` nearest rows of `train_features`.
pub fn knn_predict(
    train_features: &DMatrix<f64>,
    train_labels: &[usize],
    n_classes: usize,
    query: &DMatrix<f64>,
    config: &KnnConfig,
) -> Result<Vec<usize>> {
    config.validate()?;
    let n = train_features.nrows();
    if n == 0 {
        return Err(NarxError::InvalidArgument("empty training set".into()));
    }
    if train_labels.len() != n {
        return Err(NarxError::DimensionMismatch {
            expected: n,
            actual: train_labels.len(),
        });
    }
    if query.ncols() != train_features.ncols() {
        return Err(NarxError::DimensionMismatch {
            expected: train_features.ncols(),
            actual: query.ncols(),
        });
    }
    if config.k_neighbors > n {
        return Err(NarxError::InvalidArgument(format!(
            "k_neighbors {} exceeds training size {n}",
            config.k_neighbors
        )));
    }
    if let Some(&bad) = train_labels.iter().find(|&&y| y >= n_classes) {
        return Err(NarxError::InvalidArgument(format!("label {bad} out of range for {n_classes} classes")));
    }

    let d = train_features.ncols();
    let train_rows: Vec<Vec<f64>> = (0..n).map(|i| train_features.row(i).iter().copied().collect()).collect();
    let preds = (0..query.nrows())
        .into_par_iter()
        .map(|q| {
            let row: Vec<f64> = query.row(q).iter().copied().collect();
            let mut dist: Vec<(f64, usize)> = train_rows
                .iter()
                .enumerate()
                .map(|(i, t)| (config.metric.power_sum((0..d).map(|c| row[c] - t[c])), i))
                .collect();
            let k = config.k_neighbors;
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < n {
                dist.select_nth_unstable_by(k - 1, cmp);
            }
            let mut votes = vec![0usize; n_classes];
            for &(_, i) in &dist[..k] {
                votes[train_labels[i]] += 1;
            }
            (0..n_classes).fold(0, |best, c| if votes[c] > votes[best] { c } else { best })
        })
        .collect();
    Ok(preds)
}

/// Accuracy of each fold when the KNN is trained on the other folds.
pub fn knn_cv(data: &Dataset, folds: &FoldAssignment, config: &KnnConfig) -> Result<Vec<f64>> {
    if folds.fold_of.len() != data.n_samples() {
        return Err(NarxError::DimensionMismatch {
            expected: data.n_samples(),
            actual: folds.fold_of.len(),
        });
    }
    folds
        .partitions()
        .into_iter()
        .map(|(train, test)| {
            let xt = data.features.select_rows(&train);
            let yt: Vec<usize> = train.iter().map(|&i| data.labels[i]).collect();
            let xq = data.features.select_rows(&test);
            let yq: Vec<usize> = test.iter().map(|&i| data.labels[i]).collect();
            let pred = knn_predict(&xt, &yt, data.n_classes(), &xq, config)?;
            accuracy(&pred, &yq)
        })
        .collect()
}

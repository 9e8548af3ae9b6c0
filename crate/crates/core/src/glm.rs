//! Binary logistic regression fitted by penalized maximum likelihood.
//!
//! The model is `P(y = 1 | x) = logistic(x · θ)`. No intercept is added
//! implicitly: pass a column of ones when one is wanted.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{NarxError, Result};

pub const DEFAULT_RIDGE: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-8;

/// Largest probability reported by predictions; keeps outputs inside (0, 1).
const P_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

/// `1 / (1 + exp(-x))`, evaluated without overflow for any finite `x`.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(x))`.
#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// L2 penalty `λ/2 ‖θ‖²` applied to every coefficient.
    pub ridge: f64,
    pub max_iter: usize,
    /// Converged once the largest coefficient update falls below this.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            ridge: DEFAULT_RIDGE,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub ridge: f64,
    /// Targets were all one value; the fit only pushes every probability
    /// toward that value as far as the penalty allows.
    pub degenerate: bool,
}

impl LogisticFit {
    pub fn zeros(p: usize) -> Self {
        LogisticFit {
            coefficients: vec![0.0; p],
            converged: true,
            iterations: 0,
            ridge: 0.0,
            degenerate: false,
        }
    }
}

/// Penalized Bernoulli log-likelihood `Σ [y η − ln(1+e^η)] − λ/2 ‖θ‖²`.
pub fn penalized_log_likelihood(
    columns: &DMatrix<f64>,
    targets: &[bool],
    coefficients: &[f64],
    ridge: f64,
) -> f64 {
    let eta = linear_predictor(columns, coefficients);
    log_likelihood_from_eta(&eta, targets) - 0.5 * ridge * sq_norm(coefficients)
}

fn log_likelihood_from_eta(eta: &[f64], targets: &[bool]) -> f64 {
    eta.iter()
        .zip(targets)
        .map(|(&e, &y)| if y { e } else { 0.0 } - softplus(e))
        .sum()
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn linear_predictor(columns: &DMatrix<f64>, coefficients: &[f64]) -> Vec<f64> {
    let n = columns.nrows();
    let data = columns.as_slice();
    let mut eta = vec![0.0; n];
    for (j, &c) in coefficients.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let col = &data[j * n..(j + 1) * n];
        eta.iter_mut().zip(col).for_each(|(e, &x)| *e += c * x);
    }
    eta
}

/// Maximizes the ridge-penalized log-likelihood by iteratively reweighted
/// least squares (Newton's method), halving steps that would lower the
/// objective.
pub fn fit_logistic(columns: &DMatrix<f64>, targets: &[bool], opts: &FitOptions) -> Result<LogisticFit> {
    let (n, p) = columns.shape();
    if p == 0 {
        return Err(NarxError::InvalidArgument("no regressor columns".into()));
    }
    if n < 2 {
        return Err(NarxError::InvalidArgument(format!("{n} sample(s); need at least 2")));
    }
    if targets.len() != n {
        return Err(NarxError::DimensionMismatch {
            expected: n,
            actual: targets.len(),
        });
    }
    if columns.iter().any(|v| !v.is_finite()) {
        return Err(NarxError::NonFinite("regressor columns"));
    }
    if !(opts.ridge >= 0.0 && opts.ridge.is_finite()) || opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(NarxError::InvalidArgument("ridge must be >= 0 and tol > 0".into()));
    }
    let positives = targets.iter().filter(|&&t| t).count();
    let degenerate = positives == 0 || positives == n;
    let ridge = if degenerate { opts.ridge.max(DEFAULT_RIDGE) } else { opts.ridge };

    let data = columns.as_slice();
    let col = |j: usize| &data[j * n..(j + 1) * n];
    let mut theta = vec![0.0; p];
    let mut eta = vec![0.0; n];
    // penalized objective at `theta`
    let mut objective = log_likelihood_from_eta(&eta, targets);
    let mut weights = vec![0.0; n];
    let mut resid = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        for i in 0..n {
            let pi = logistic(eta[i]);
            weights[i] = pi * (1.0 - pi);
            resid[i] = if targets[i] { 1.0 } else { 0.0 } - pi;
        }
        let mut hessian = DMatrix::<f64>::zeros(p, p);
        let mut grad = DVector::<f64>::zeros(p);
        for a in 0..p {
            let ca = col(a);
            grad[a] = ca.iter().zip(&resid).map(|(x, r)| x * r).sum::<f64>() - ridge * theta[a];
            for b in 0..=a {
                let cb = col(b);
                let h: f64 = ca
                    .iter()
                    .zip(cb)
                    .zip(&weights)
                    .map(|((x, z), w)| x * z * w)
                    .sum();
                hessian[(a, b)] = h;
                hessian[(b, a)] = h;
            }
            hessian[(a, a)] += ridge;
        }
        let step = match hessian.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => hessian
                .lu()
                .solve(&grad)
                .ok_or(NarxError::SingularSystem { iterations })?,
        };
        if step.iter().any(|s| !s.is_finite()) {
            return Err(NarxError::SingularSystem { iterations });
        }

        let mut scale = 1.0;
        let mut candidate = vec![0.0; p];
        let mut accepted = false;
        for _ in 0..40 {
            for j in 0..p {
                candidate[j] = theta[j] + scale * step[j];
            }
            let cand_eta = linear_predictor(columns, &candidate);
            let cand_obj = log_likelihood_from_eta(&cand_eta, targets) - 0.5 * ridge * sq_norm(&candidate);
            if cand_obj >= objective - 1e-12 * objective.abs() {
                eta = cand_eta;
                objective = cand_obj;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        let change = step.iter().map(|s| (scale * s).abs()).fold(0.0, f64::max);
        if accepted {
            theta.copy_from_slice(&candidate);
        }
        if change < opts.tol || !accepted {
            converged = accepted;
            break;
        }
    }

    if theta.iter().any(|t| !t.is_finite()) {
        return Err(NarxError::NonFinite("fitted coefficients"));
    }
    Ok(LogisticFit {
        coefficients: theta,
        converged,
        iterations,
        ridge,
        degenerate,
    })
}

/// Row-wise `logistic(columns · θ)`.
pub fn predict_probability(fit: &LogisticFit, columns: &DMatrix<f64>) -> Result<Vec<f64>> {
    if columns.ncols() != fit.coefficients.len() {
        return Err(NarxError::DimensionMismatch {
            expected: fit.coefficients.len(),
            actual: columns.ncols(),
        });
    }
    Ok(linear_predictor(columns, &fit.coefficients)
        .into_iter()
        .map(|e| logistic(e).clamp(f64::MIN_POSITIVE, P_MAX))
        .collect())
}

/// Fraction of positions where `predicted` equals `truth`.
pub fn accuracy<T: PartialEq>(predicted: &[T], truth: &[T]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(NarxError::DimensionMismatch {
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(NarxError::InvalidArgument("accuracy of an empty set".into()));
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Binary accuracy; a probability above 0.5 predicts the positive class.
pub fn binary_accuracy(probabilities: &[f64], truth: &[bool]) -> Result<f64> {
    let predicted: Vec<bool> = probabilities.iter().map(|&p| p > 0.5).collect();
    accuracy(&predicted, truth)
}

/// Squared correlation `(xᵀy)² / ((xᵀx)(yᵀy))`, the error reduction ratio.
pub fn err_criterion(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(NarxError::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let xx = sq_norm(x);
    let yy = sq_norm(y);
    if xx == 0.0 || yy == 0.0 {
        return Err(NarxError::ZeroNorm);
    }
    Ok(((xy * xy) / (xx * yy)).min(1.0))
}

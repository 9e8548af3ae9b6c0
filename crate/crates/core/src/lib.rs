//! Logistic-NARX classification.
//!
//! Candidate regressors are polynomial NARX monomials over the input
//! features ([`regressors`]). A forward selection loop ([`ofr`]) orthogonalizes
//! the remaining candidates against the chosen ones and ranks them by
//! cross-validated one-vs-all logistic accuracy; the selected terms feed a
//! one-vs-all probability model ([`multiclass`]) that classifies by argmax.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod glm;
pub mod multiclass;
pub mod ofr;
pub mod regressors;
pub mod rng;
pub mod waveform;

pub use error::{NarxError, Result};

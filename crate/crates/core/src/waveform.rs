//! Synthetic three-class waveform data (21 signal + 19 noise attributes).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataset::Dataset;
use crate::error::Result;
use crate::rng::{stream_rng, Stream};

pub const SIGNAL_ATTRIBUTES: usize = 21;
pub const NOISE_ATTRIBUTES: usize = 19;

fn triangle(i: usize, centre: i64) -> f64 {
    (6 - (i as i64 - centre).abs()).max(0) as f64
}

/// Base shapes peaking at attribute 11, 7 and 15 (1-based).
fn base(shape: usize, i: usize) -> f64 {
    match shape {
        0 => triangle(i, 11),
        1 => triangle(i, 15),
        _ => triangle(i, 7),
    }
}

/// Draws `n` rows with classes chosen uniformly at random.
pub fn generate_waveform(n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = stream_rng(seed, Stream::Synthetic);
    let noise: Normal<f64> = Normal::new(0.0, 1.0).expect("unit normal");
    let d = SIGNAL_ATTRIBUTES + NOISE_ATTRIBUTES;
    let mut rows = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let class = rng.random_range(0..3usize);
        let (a, b) = [(0, 1), (0, 2), (1, 2)][class];
        let u: f64 = rng.random();
        for i in 1..=SIGNAL_ATTRIBUTES {
            rows.push(u * base(a, i) + (1.0 - u) * base(b, i) + noise.sample(&mut rng));
        }
        for _ in 0..NOISE_ATTRIBUTES {
            rows.push(StandardNormal.sample(&mut rng));
        }
        labels.push(class);
    }
    let features = DMatrix::from_row_slice(n, d, &rows);
    let feature_names = (1..=d).map(|i| format!("x{i}")).collect();
    let class_names = (0..3).map(|c| c.to_string()).collect();
    Dataset::new(features, labels, class_names, feature_names)
}

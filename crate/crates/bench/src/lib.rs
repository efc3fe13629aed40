//! Fixtures shared by the benchmarks.

use bae_core::data;
use bae_core::rng;
use bae_core::DataMatrix;
use rand::Rng;

/// Synthetic benchmark matrix, already in the unit cube.
pub fn synthetic(n_inliers: usize, n_outliers: usize, dim: usize, seed: u64) -> DataMatrix {
    data::make_synthetic(n_inliers, n_outliers, dim, seed)
        .expect("positive sizes")
        .matrix
}

pub fn random_scores(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, 0);
    (0..n).map(|_| r.random()).collect()
}

/// Every tenth instance is an outlier.
pub fn sparse_labels(n: usize) -> Vec<bool> {
    (0..n).map(|i| i % 10 == 0).collect()
}

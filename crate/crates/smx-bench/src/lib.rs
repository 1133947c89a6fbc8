//! Shared fixtures for the benchmark targets.

use rand::prelude::*;
use rand::SeedableRng;
use smx_core::EmbeddingMatrix;

/// Deterministic uniform [-1, 1) matrix.
pub fn random_matrix(n: usize, d: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    EmbeddingMatrix::from_rows(n, d, data).expect("finite data")
}

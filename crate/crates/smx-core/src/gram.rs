//! Centered, Frobenius-normalized Gram matrices.
//!
//! Centering uses the double-centering identity (subtract row and column
//! means, add the grand mean) instead of materializing the centering matrix,
//! so memory stays at one n×n buffer.

use crate::error::{Error, Result};
use crate::matrix::{dot, row_normalize, EmbeddingMatrix};

/// A centered Gram matrix scaled to unit Frobenius norm.
#[derive(Debug, Clone)]
pub struct NormalizedGram {
    n: usize,
    values: Vec<f64>,
    frob_norm_of_source: f64,
}

impl NormalizedGram {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Frobenius norm of the centered Gram before normalization.
    pub fn frob_norm_of_source(&self) -> f64 {
        self.frob_norm_of_source
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Frobenius inner product with another gram of the same size.
    pub fn frobenius_dot(&self, other: &NormalizedGram) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::RowCountMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(dot(&self.values, &other.values))
    }

}

/// Double-center a square matrix in place: M ← M − rowmean − colmean + grandmean.
///
/// Works for asymmetric matrices too (both sides are centered).
pub(crate) fn double_center(values: &mut [f64], n: usize) {
    let mut row_means = vec![0.0; n];
    let mut col_means = vec![0.0; n];
    let mut grand = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = values[i * n + j];
            row_means[i] += v;
            col_means[j] += v;
            grand += v;
        }
    }
    let nf = n as f64;
    for m in row_means.iter_mut().chain(col_means.iter_mut()) {
        *m /= nf;
    }
    grand /= nf * nf;
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] += grand - row_means[i] - col_means[j];
        }
    }
}

/// K̂ = H X Xᵀ H / ‖H X Xᵀ H‖_F.
///
/// Fails when the centered Gram is zero (all rows identical).
pub fn centered_normalized_gram(e: &EmbeddingMatrix) -> Result<NormalizedGram> {
    let n = e.n_rows();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = dot(e.row(i), e.row(j));
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    double_center(&mut values, n);
    let frob = dot(&values, &values).sqrt();
    if frob <= 1e-12 {
        return Err(Error::DegenerateGram);
    }
    for v in &mut values {
        *v /= frob;
    }
    Ok(NormalizedGram {
        n,
        values,
        frob_norm_of_source: frob,
    })
}

/// Centered normalized Gram of the row-normalized matrix (cosine-similarity
/// Gram). Equals `centered_normalized_gram(row_normalize(e))`.
pub fn cosine_gram(e: &EmbeddingMatrix) -> Result<NormalizedGram> {
    centered_normalized_gram(&row_normalize(e)?)
}

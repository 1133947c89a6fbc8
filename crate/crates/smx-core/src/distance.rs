//! Pairwise distance metrics and blocked evaluation.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::matrix::{dot, norm, EmbeddingMatrix};

/// Distance used for pairwise comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    Cosine,
    Euclidean,
    SquaredEuclidean,
}

impl std::fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DistanceMetric::Cosine => "cosine",
            DistanceMetric::Euclidean => "euclidean",
            DistanceMetric::SquaredEuclidean => "squared_euclidean",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for DistanceMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(DistanceMetric::Cosine),
            "euclidean" | "l2" => Ok(DistanceMetric::Euclidean),
            "squared_euclidean" | "sq_euclidean" | "l2sq" => Ok(DistanceMetric::SquaredEuclidean),
            other => Err(Error::InvalidArgument(format!(
                "unknown metric {other:?}, expected cosine, euclidean, or squared_euclidean"
            ))),
        }
    }
}

/// Distance between two raw rows. Cosine is 1 − cos similarity and rejects
/// zero-norm inputs.
pub fn distance(metric: DistanceMetric, a: &[f64], b: &[f64]) -> Result<f64> {
    match metric {
        DistanceMetric::Cosine => {
            let na = norm(a);
            let nb = norm(b);
            if na <= 1e-12 || nb <= 1e-12 {
                return Err(Error::InvalidArgument(
                    "cosine distance undefined for a zero-norm vector".into(),
                ));
            }
            Ok(1.0 - dot(a, b) / (na * nb))
        }
        DistanceMetric::Euclidean => Ok(sq_dist(a, b).sqrt()),
        DistanceMetric::SquaredEuclidean => Ok(sq_dist(a, b)),
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        acc += d * d;
    }
    acc
}

/// Evaluate a rectangular block of the pairwise distance matrix.
///
/// Entry `(a, b)` of the result holds the distance between item
/// `rows.start + a` and item `cols.start + b`. Returned row-major with shape
/// `(rows.len(), cols.len())`.
pub fn pairwise_distance_block(
    e: &EmbeddingMatrix,
    rows: Range<usize>,
    cols: Range<usize>,
    metric: DistanceMetric,
) -> Result<Vec<f64>> {
    if rows.end > e.n_rows() || cols.end > e.n_rows() {
        let bad = rows.end.max(cols.end);
        return Err(Error::IndexOutOfRange {
            index: bad - 1,
            len: e.n_rows(),
        });
    }
    if metric == DistanceMetric::Cosine {
        for i in rows.clone().chain(cols.clone()) {
            if norm(e.row(i)) <= 1e-12 {
                return Err(Error::ZeroNormRow { row: i });
            }
        }
    }
    let mut out = Vec::with_capacity(rows.len() * cols.len());
    for i in rows {
        for j in cols.clone() {
            out.push(distance(metric, e.row(i), e.row(j))?);
        }
    }
    Ok(out)
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors shared by every subsystem in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad magic bytes, expected \"SMX1\"")]
    BadMagic { path: PathBuf },

    #[error("{path}: unsupported format version {found}, expected {expected}")]
    BadVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("{path}: payload truncated, expected {expected} values, found {found}")]
    TruncatedPayload {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("empty matrix: n_rows and n_cols must both be at least 1")]
    EmptyMatrix,

    #[error("label count {labels} does not match row count {rows}")]
    LabelMismatch { labels: usize, rows: usize },

    #[error("duplicate label {label:?}")]
    DuplicateLabel { label: String },

    #[error("row {row} has norm below 1e-12 and cannot be normalized")]
    ZeroNormRow { row: usize },

    #[error("degenerate Gram: all rows identical, centered Gram is zero")]
    DegenerateGram,

    #[error("class {label:?} has a zero mean of normalized features")]
    DegenerateClassCenter { label: String },

    #[error("row count mismatch: {left} vs {right}")]
    RowCountMismatch { left: usize, right: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("index {index} out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("top_k {top_k} out of range: must be in [1, {max}]")]
    TopKOutOfRange { top_k: usize, max: usize },

    #[error("invalid tiling parameters: {0}")]
    InvalidTiling(String),

    #[error("zero variance in correlation input")]
    ZeroVariance,

    #[error("non-finite state at sampler step {step}")]
    NonFiniteTrajectory { step: usize },

    #[error("covariance matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::BadMagic { .. } => "bad_magic",
            Error::BadVersion { .. } => "bad_version",
            Error::TruncatedPayload { .. } => "truncated_payload",
            Error::Parse { .. } => "parse",
            Error::NonFinite { .. } => "non_finite",
            Error::EmptyMatrix => "empty_matrix",
            Error::LabelMismatch { .. } => "label_mismatch",
            Error::DuplicateLabel { .. } => "duplicate_label",
            Error::ZeroNormRow { .. } => "zero_norm_row",
            Error::DegenerateGram => "degenerate_gram",
            Error::DegenerateClassCenter { .. } => "degenerate_class_center",
            Error::RowCountMismatch { .. } => "row_count_mismatch",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::TopKOutOfRange { .. } => "top_k_out_of_range",
            Error::InvalidTiling(_) => "invalid_tiling",
            Error::ZeroVariance => "zero_variance",
            Error::NonFiniteTrajectory { .. } => "non_finite_trajectory",
            Error::NotPositiveDefinite(_) => "not_positive_definite",
        }
    }
}

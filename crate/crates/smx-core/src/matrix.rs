//! Dense row-major embedding matrices and their on-disk formats.
//!
//! Storage on disk is single precision ("SMX1" binary) or decimal CSV; all
//! in-memory arithmetic is double precision.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Magic bytes of the binary embedding format.
pub const SMX1_MAGIC: [u8; 4] = *b"SMX1";
/// Supported binary format version.
pub const SMX1_VERSION: u32 = 1;

/// On-disk embedding format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Binary,
    Csv,
}

impl std::str::FromStr for FileFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" | "bin" | "smx1" => Ok(FileFormat::Binary),
            "csv" => Ok(FileFormat::Csv),
            other => Err(Error::InvalidArgument(format!(
                "unknown format {other:?}, expected binary or csv"
            ))),
        }
    }
}

/// A dense real matrix with one item (class, identity, feature) per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl EmbeddingMatrix {
    /// Build a matrix from row-major data. Rejects empty shapes, non-finite
    /// entries, and size mismatches.
    pub fn from_rows(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if data.len() != n_rows * n_cols {
            return Err(Error::TruncatedPayload {
                path: PathBuf::new(),
                expected: n_rows * n_cols,
                found: data.len(),
            });
        }
        for (idx, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: idx / n_cols,
                    col: idx % n_cols,
                });
            }
        }
        Ok(EmbeddingMatrix {
            n_rows,
            n_cols,
            data,
            labels: None,
        })
    }

    /// Attach item labels; must be unique and one per row.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_rows {
            return Err(Error::LabelMismatch {
                labels: labels.len(),
                rows: self.n_rows,
            });
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.clone()) {
                return Err(Error::DuplicateLabel { label: l.clone() });
            }
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// ℓ2 norm of each row.
    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| norm(self.row(i))).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scale every row to unit Euclidean norm.
///
/// Fails on any row whose norm falls below 1e-12, naming the row.
pub fn row_normalize(e: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let mut data = Vec::with_capacity(e.n_rows * e.n_cols);
    for i in 0..e.n_rows {
        let row = e.row(i);
        let nrm = norm(row);
        if nrm <= 1e-12 {
            return Err(Error::ZeroNormRow { row: i });
        }
        data.extend(row.iter().map(|v| v / nrm));
    }
    Ok(EmbeddingMatrix {
        n_rows: e.n_rows,
        n_cols: e.n_cols,
        data,
        labels: e.labels.clone(),
    })
}

/// One unit-norm center per distinct class, ordered by first appearance.
///
/// Features are ℓ2-normalized first; the center is the re-normalized mean of
/// the normalized features of the class.
pub fn class_centers(features: &EmbeddingMatrix, labels: &[String]) -> Result<EmbeddingMatrix> {
    if labels.len() != features.n_rows {
        return Err(Error::LabelMismatch {
            labels: labels.len(),
            rows: features.n_rows,
        });
    }
    let normalized = row_normalize(features)?;
    let mut order: Vec<&str> = Vec::new();
    let mut index: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    for l in labels {
        if !index.contains_key(l.as_str()) {
            index.insert(l.as_str(), order.len());
            order.push(l.as_str());
        }
    }
    let d = features.n_cols;
    let mut sums = vec![0.0; order.len() * d];
    let mut counts = vec![0usize; order.len()];
    for (i, l) in labels.iter().enumerate() {
        let k = index[l.as_str()];
        let row = normalized.row(i);
        for (s, v) in sums[k * d..(k + 1) * d].iter_mut().zip(row) {
            *s += v;
        }
        counts[k] += 1;
    }
    let mut data = Vec::with_capacity(order.len() * d);
    for (k, label) in order.iter().enumerate() {
        let mean: Vec<f64> = sums[k * d..(k + 1) * d]
            .iter()
            .map(|s| s / counts[k] as f64)
            .collect();
        let nrm = norm(&mean);
        if nrm <= 1e-12 {
            return Err(Error::DegenerateClassCenter {
                label: (*label).to_string(),
            });
        }
        data.extend(mean.iter().map(|v| v / nrm));
    }
    EmbeddingMatrix::from_rows(order.len(), d, data)?
        .with_labels(order.into_iter().map(str::to_string).collect())
}

/// Load a matrix from disk, optionally attaching a sidecar label file
/// (one identifier per line).
pub fn load_embeddings(
    path: &Path,
    format: FileFormat,
    labels_path: Option<&Path>,
) -> Result<EmbeddingMatrix> {
    let matrix = match format {
        FileFormat::Binary => load_binary(path)?,
        FileFormat::Csv => load_csv(path)?,
    };
    match labels_path {
        Some(lp) => {
            let labels = load_labels(lp)?;
            matrix.with_labels(labels)
        }
        None => Ok(matrix),
    }
}

/// Write a matrix to disk in the requested format.
///
/// Binary storage is single precision; CSV prints the shortest decimal that
/// round-trips, so binary → csv → binary is bit-exact on the payload.
pub fn save_embeddings(e: &EmbeddingMatrix, path: &Path, format: FileFormat) -> Result<()> {
    match format {
        FileFormat::Binary => save_binary(e, path),
        FileFormat::Csv => save_csv(e, path),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load_binary(path: &Path) -> Result<EmbeddingMatrix> {
    let mut file = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic).map_err(|e| io_err(path, e))?;
    if magic != SMX1_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
        });
    }
    let mut u32buf = [0u8; 4];
    file.read_exact(&mut u32buf).map_err(|e| io_err(path, e))?;
    let version = u32::from_le_bytes(u32buf);
    if version != SMX1_VERSION {
        return Err(Error::BadVersion {
            path: path.to_path_buf(),
            found: version,
            expected: SMX1_VERSION,
        });
    }
    let mut u64buf = [0u8; 8];
    file.read_exact(&mut u64buf).map_err(|e| io_err(path, e))?;
    let n_rows = u64::from_le_bytes(u64buf) as usize;
    file.read_exact(&mut u64buf).map_err(|e| io_err(path, e))?;
    let n_cols = u64::from_le_bytes(u64buf) as usize;
    if n_rows == 0 || n_cols == 0 {
        return Err(Error::EmptyMatrix);
    }
    let expected = n_rows
        .checked_mul(n_cols)
        .ok_or_else(|| Error::InvalidArgument("matrix dimensions overflow".into()))?;
    let mut payload = Vec::new();
    file.read_to_end(&mut payload).map_err(|e| io_err(path, e))?;
    let found = payload.len() / 4;
    if payload.len() % 4 != 0 || found != expected {
        return Err(Error::TruncatedPayload {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    let mut data = Vec::with_capacity(expected);
    for (idx, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                row: idx / n_cols,
                col: idx % n_cols,
            });
        }
        data.push(v as f64);
    }
    EmbeddingMatrix::from_rows(n_rows, n_cols, data)
}

fn save_binary(e: &EmbeddingMatrix, path: &Path) -> Result<()> {
    let mut file = BufWriter::new(File::create(path).map_err(|err| io_err(path, err))?);
    file.write_all(&SMX1_MAGIC).map_err(|err| io_err(path, err))?;
    file.write_all(&SMX1_VERSION.to_le_bytes())
        .map_err(|err| io_err(path, err))?;
    file.write_all(&(e.n_rows as u64).to_le_bytes())
        .map_err(|err| io_err(path, err))?;
    file.write_all(&(e.n_cols as u64).to_le_bytes())
        .map_err(|err| io_err(path, err))?;
    for v in &e.data {
        file.write_all(&(*v as f32).to_le_bytes())
            .map_err(|err| io_err(path, err))?;
    }
    file.flush().map_err(|err| io_err(path, err))
}

fn load_csv(path: &Path) -> Result<EmbeddingMatrix> {
    let file = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
    let mut data = Vec::new();
    let mut n_cols = None;
    let mut n_rows = 0usize;
    for (line_idx, line) in file.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut row_len = 0usize;
        for (col_idx, cell) in trimmed.split(',').enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: line_idx + 1,
                column: col_idx + 1,
                message: format!("invalid real number {:?}", cell.trim()),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: n_rows,
                    col: col_idx,
                });
            }
            data.push(v);
            row_len += 1;
        }
        match n_cols {
            None => n_cols = Some(row_len),
            Some(expected) if expected != row_len => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_idx + 1,
                    column: row_len,
                    message: format!("ragged row: expected {expected} values, found {row_len}"),
                });
            }
            _ => {}
        }
        n_rows += 1;
    }
    let n_cols = n_cols.ok_or(Error::EmptyMatrix)?;
    EmbeddingMatrix::from_rows(n_rows, n_cols, data)
}

fn save_csv(e: &EmbeddingMatrix, path: &Path) -> Result<()> {
    let mut file = BufWriter::new(File::create(path).map_err(|err| io_err(path, err))?);
    for i in 0..e.n_rows {
        let row: Vec<String> = e.row(i).iter().map(|v| format!("{v}")).collect();
        writeln!(file, "{}", row.join(",")).map_err(|err| io_err(path, err))?;
    }
    file.flush().map_err(|err| io_err(path, err))
}

/// Load a sidecar label file: one identifier per line, blank lines skipped.
pub fn load_labels(path: &Path) -> Result<Vec<String>> {
    let file = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
    let mut labels = Vec::new();
    for line in file.lines() {
        let line = line.map_err(|e| io_err(path, e))?;
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            labels.push(trimmed.to_string());
        }
    }
    Ok(labels)
}

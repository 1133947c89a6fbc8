pub mod align;
pub mod convert;
pub mod genmetrics;
pub mod mine;
pub mod sample;
pub mod select;
pub mod theorem;

use std::path::{Path, PathBuf};

use anyhow::Context;
use smx_core::{load_embeddings, EmbeddingMatrix, FileFormat};

use crate::GlobalOpts;

pub fn parse_format(s: &str) -> anyhow::Result<FileFormat> {
    Ok(s.parse::<FileFormat>()?)
}

pub fn load_matrix(
    path: &Path,
    global: &GlobalOpts,
    manifest: &mut crate::report::ManifestBuilder,
) -> anyhow::Result<EmbeddingMatrix> {
    manifest.input(path)?;
    let format = parse_format(&global.format)?;
    load_embeddings(path, format, None)
        .with_context(|| format!("loading {}", path.display()))
}

/// Swap the extension of a path, keeping the rest.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn write_text(path: &Path, contents: &str, quiet: bool, what: &str) -> anyhow::Result<()> {
    std::fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))?;
    if !quiet {
        eprintln!("{what} written to {}", path.display());
    }
    Ok(())
}

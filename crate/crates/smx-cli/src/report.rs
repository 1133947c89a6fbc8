//! Run manifests and report emission.
//!
//! Every JSON report embeds a manifest (subcommand, argv, input digests,
//! tool version, seed, wall-clock duration). The `result` payload is
//! byte-identical across reruns with the same inputs and flags; timing and
//! throughput live in the manifest and are excluded from that guarantee.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub argv: Vec<String>,
    pub version: String,
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    pub threads: usize,
    pub duration_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<serde_json::Value>,
}

pub struct ManifestBuilder {
    subcommand: String,
    argv: Vec<String>,
    inputs: BTreeMap<String, String>,
    seed: u64,
    started: Instant,
    stats: Option<serde_json::Value>,
}

impl ManifestBuilder {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        ManifestBuilder {
            subcommand: subcommand.to_string(),
            argv: std::env::args().skip(1).collect(),
            inputs: BTreeMap::new(),
            seed,
            started: Instant::now(),
            stats: None,
        }
    }

    /// Record the sha-256 digest of an input file.
    pub fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        let mut file = std::fs::File::open(path).map_err(|e| smx_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut hasher = Sha256::new();
        let mut buf = [0u8; 65536];
        loop {
            let n = file.read(&mut buf)?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
        }
        self.inputs.insert(
            path.display().to_string(),
            hex::encode(hasher.finalize()),
        );
        Ok(())
    }

    pub fn stats(&mut self, stats: impl Serialize) {
        self.stats = serde_json::to_value(stats).ok();
    }

    pub fn finish(self) -> RunManifest {
        RunManifest {
            subcommand: self.subcommand,
            argv: self.argv,
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: self.inputs,
            seed: self.seed,
            threads: rayon::current_num_threads(),
            duration_secs: self.started.elapsed().as_secs_f64(),
            stats: self.stats,
        }
    }
}

#[derive(Serialize)]
pub struct Report<T: Serialize> {
    pub manifest: RunManifest,
    pub result: T,
}

/// Write a report to `out` (or stdout when absent) as pretty JSON.
pub fn emit<T: Serialize>(
    manifest: ManifestBuilder,
    result: T,
    out: Option<&Path>,
    quiet: bool,
) -> anyhow::Result<()> {
    let report = Report {
        manifest: manifest.finish(),
        result,
    };
    let json = serde_json::to_string_pretty(&report)?;
    match out {
        Some(path) => {
            std::fs::write(path, json.as_bytes())
                .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
            if !quiet {
                eprintln!("report written to {}", path.display());
            }
        }
        None => println!("{json}"),
    }
    Ok(())
}

use std::path::PathBuf;

use clap::Args;
use smx_core::{eval_metrics, load_labels, ClassFeatureSet};

use super::load_matrix;
use crate::report::{emit, ManifestBuilder};
use crate::GlobalOpts;

#[derive(Args)]
pub struct GenmetricsArgs {
    /// Feature matrix (one generated sample per row)
    #[arg(long)]
    pub features: PathBuf,

    /// Class label per feature row, one identifier per line
    #[arg(long)]
    pub labels: PathBuf,

    /// Target center matrix
    #[arg(long)]
    pub targets: PathBuf,

    /// Labels for target rows; default: distinct feature labels in order
    #[arg(long)]
    pub target_labels: Option<PathBuf>,

    /// Coverage argmax over every target row instead of the evaluated subset
    #[arg(long)]
    pub strict_coverage: bool,
}

pub fn run(args: GenmetricsArgs, global: &GlobalOpts) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::new("genmetrics", global.seed);
    let features = load_matrix(&args.features, global, &mut manifest)?;
    manifest.input(&args.labels)?;
    let labels = load_labels(&args.labels)?;
    let targets = load_matrix(&args.targets, global, &mut manifest)?;
    let target_labels = match &args.target_labels {
        Some(path) => {
            manifest.input(path)?;
            Some(load_labels(path)?)
        }
        None => None,
    };
    let set = ClassFeatureSet::new(&features, &labels, &targets, target_labels.as_deref())?;
    let metrics = eval_metrics(&set, args.strict_coverage)?;
    emit(manifest, metrics, global.out.as_deref(), global.quiet)
}

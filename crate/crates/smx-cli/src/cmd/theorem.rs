use std::path::PathBuf;

use clap::Subcommand;
use serde_json::json;
use smx_core::{
    centered_margin, centered_normalized_gram, cosine_gram, exact_preservation_probability,
    preservation_report, random_positive_margin_triplets, residual_norm, simulate_misalignment,
    topk_overlap_analysis, universal_lower_bound, DistanceMetric, MaskKind, NormalizedGram,
    TripletMask,
};

use super::{load_matrix, write_text};
use crate::report::{emit, ManifestBuilder};
use crate::GlobalOpts;

#[derive(Subcommand)]
pub enum TheoremCmd {
    /// Universal lower bound on order preservation from (rho, margin, n)
    Bound {
        #[arg(long)]
        rho: f64,
        /// Effective triplet margin
        #[arg(long)]
        delta: f64,
        /// Number of items n; the slice dimension is n(n−1)/2
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "cosine", value_parser = clap::value_parser!(MaskKind))]
        kind: MaskKind,
        /// Also report the expected overlap K · p at this top-K
        #[arg(long)]
        topk: Option<usize>,
    },
    /// Exact probability and bound for one triplet on a real Gram
    Exact {
        #[arg(long)]
        embeddings: PathBuf,
        /// Triplet as i,j,k (anchor, closer, farther)
        #[arg(long)]
        triplet: String,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value = "cosine", value_parser = clap::value_parser!(MaskKind))]
        kind: MaskKind,
    },
    /// Monte-Carlo misalignment simulation against the exact formula
    Simulate {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        /// Number of random positive-margin triplets to track
        #[arg(long, default_value_t = 20)]
        triplets: usize,
        #[arg(long, default_value = "cosine", value_parser = clap::value_parser!(MaskKind))]
        kind: MaskKind,
    },
    /// Top-K most-distant pair overlap between two spaces vs the bound
    Overlap {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long, default_value = "cosine", value_parser = clap::value_parser!(DistanceMetric))]
        metric: DistanceMetric,
        #[arg(long, default_value_t = 100)]
        topk: usize,
        /// Effective margin override (default: mean frontier gap of the two spaces)
        #[arg(long)]
        margin: Option<f64>,
        /// Write the per-space top-K pair lists as CSV
        #[arg(long)]
        csv_x: Option<PathBuf>,
        #[arg(long)]
        csv_y: Option<PathBuf>,
    },
}

fn gram_for_kind(
    e: &smx_core::EmbeddingMatrix,
    kind: MaskKind,
) -> anyhow::Result<NormalizedGram> {
    Ok(match kind {
        MaskKind::Cosine => cosine_gram(e)?,
        MaskKind::SquaredEuclidean => centered_normalized_gram(e)?,
    })
}

pub fn run(cmd: TheoremCmd, global: &GlobalOpts) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::new("theorem", global.seed);
    match cmd {
        TheoremCmd::Bound {
            rho,
            delta,
            n,
            kind,
            topk,
        } => {
            if n < 2 {
                anyhow::bail!(smx_core::Error::InvalidArgument(
                    "n must be at least 2".into()
                ));
            }
            let n_slice = n * (n - 1) / 2;
            let p = universal_lower_bound(rho, delta, n_slice, kind)?;
            let result = json!({
                "rho": rho,
                "margin": delta,
                "n_items": n,
                "n_slice": n_slice,
                "kind": kind,
                "p_lower_bound": p,
                "expected_overlap": topk.map(|k| k as f64 * p),
            });
            emit(manifest, result, global.out.as_deref(), global.quiet)
        }
        TheoremCmd::Exact {
            embeddings,
            triplet,
            rho,
            kind,
        } => {
            let e = load_matrix(&embeddings, global, &mut manifest)?;
            let parts: Vec<usize> = triplet
                .split(',')
                .map(|v| v.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| {
                    smx_core::Error::InvalidArgument(format!(
                        "triplet must be i,j,k of integers, got {triplet:?}"
                    ))
                })?;
            if parts.len() != 3 {
                anyhow::bail!(smx_core::Error::InvalidArgument(
                    "triplet must have exactly three indices".into()
                ));
            }
            let gram = gram_for_kind(&e, kind)?;
            let mask = TripletMask::new(parts[0], parts[1], parts[2], kind)?;
            let report = preservation_report(&mask, &gram, rho)?;
            emit(manifest, report, global.out.as_deref(), global.quiet)
        }
        TheoremCmd::Simulate {
            embeddings,
            rho,
            trials,
            triplets,
            kind,
        } => {
            let e = load_matrix(&embeddings, global, &mut manifest)?;
            let gram = gram_for_kind(&e, kind)?;
            let masks = random_positive_margin_triplets(&gram, kind, triplets, global.seed)?;
            let sim = simulate_misalignment(&gram, rho, &masks, trials, global.seed)?;
            let n = gram.n();
            let n_slice = n * (n - 1) / 2;
            let mut per_triplet = Vec::with_capacity(masks.len());
            for (mask, freq) in masks.iter().zip(&sim.frequencies) {
                let margin = centered_margin(mask, &gram)?;
                let residual = residual_norm(mask, &gram)?;
                let exact = exact_preservation_probability(rho, margin, residual, n_slice)?;
                per_triplet.push(json!({
                    "i": mask.i, "j": mask.j, "k": mask.k,
                    "margin": margin,
                    "residual": residual,
                    "exact_probability": exact,
                    "empirical_frequency": freq,
                }));
            }
            let result = json!({
                "rho": rho,
                "trials": trials,
                "n_items": n,
                "n_slice": n_slice,
                "kind": kind,
                "triplets": per_triplet,
                "mean_residual_energy": sim.mean_residual_energy,
                "expected_residual_energy": 1.0 - rho * rho,
            });
            emit(manifest, result, global.out.as_deref(), global.quiet)
        }
        TheoremCmd::Overlap {
            x,
            y,
            metric,
            topk,
            margin,
            csv_x,
            csv_y,
        } => {
            let mx = load_matrix(&x, global, &mut manifest)?;
            let my = load_matrix(&y, global, &mut manifest)?;
            let report = topk_overlap_analysis(&mx, &my, metric, topk, margin)?;
            for (path, pairs) in [(csv_x, &report.pairs_x), (csv_y, &report.pairs_y)] {
                if let Some(p) = path {
                    let mut text = String::from("rank,i,j\n");
                    for (rank, (i, j)) in pairs.iter().enumerate() {
                        text.push_str(&format!("{rank},{i},{j}\n"));
                    }
                    write_text(&p, &text, global.quiet, "top-k pairs")?;
                }
            }
            emit(manifest, report, global.out.as_deref(), global.quiet)
        }
    }
}

use std::path::PathBuf;

use clap::Subcommand;
use serde_json::json;
use smx_core::{
    cknna, correlation_stats, distance_correlation_lists, linear_cka, linear_cka_feature,
    random_baseline, save_embeddings, DistanceMetric,
};

use super::{load_matrix, parse_format, write_text};
use crate::report::{emit, ManifestBuilder};
use crate::GlobalOpts;

const DEFAULT_TAU: f64 = 0.07;

#[derive(Subcommand)]
pub enum AlignCmd {
    /// Linear centered-kernel alignment between two spaces
    Cka {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
    },
    /// Soft nearest-neighbor alignment at temperature tau
    Cknna {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// Soft-neighbor temperature; defaults to 0.07 when omitted
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Pairwise distance lists of two spaces plus Pearson/Spearman
    Distcorr {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        conditions: PathBuf,
        #[arg(long, default_value = "cosine", value_parser = clap::value_parser!(DistanceMetric))]
        metric_emb: DistanceMetric,
        #[arg(long, default_value = "cosine", value_parser = clap::value_parser!(DistanceMetric))]
        metric_cond: DistanceMetric,
        /// Write the aligned distance lists as CSV (columns i, j, dist_emb, dist_cond)
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Standard-normal baseline matrix written as an embedding file
    Randn {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Destination embedding file
        #[arg(long)]
        out_file: PathBuf,
    },
}

pub fn run(cmd: AlignCmd, global: &GlobalOpts) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::new("align", global.seed);
    match cmd {
        AlignCmd::Cka { x, y } => {
            let mx = load_matrix(&x, global, &mut manifest)?;
            let my = load_matrix(&y, global, &mut manifest)?;
            let score = linear_cka(&mx, &my)?;
            let feature_route = linear_cka_feature(&mx, &my)?;
            let result = json!({
                "metric": "cka",
                "value": score.value,
                "value_feature_route": feature_route,
                "route_agreement": (score.value - feature_route).abs(),
                "n_items": score.n_items,
            });
            emit(manifest, result, global.out.as_deref(), global.quiet)
        }
        AlignCmd::Cknna { x, y, tau } => {
            let mx = load_matrix(&x, global, &mut manifest)?;
            let my = load_matrix(&y, global, &mut manifest)?;
            let tau_defaulted = tau.is_none();
            let tau = tau.unwrap_or(DEFAULT_TAU);
            if tau_defaulted && !global.quiet {
                eprintln!("note: tau defaulted to {DEFAULT_TAU}");
            }
            let score = cknna(&mx, &my, tau)?;
            let result = json!({
                "metric": "cknna",
                "value": score.value,
                "n_items": score.n_items,
                "tau": tau,
                "tau_defaulted": tau_defaulted,
            });
            emit(manifest, result, global.out.as_deref(), global.quiet)
        }
        AlignCmd::Distcorr {
            embeddings,
            conditions,
            metric_emb,
            metric_cond,
            csv,
        } => {
            let e = load_matrix(&embeddings, global, &mut manifest)?;
            let c = load_matrix(&conditions, global, &mut manifest)?;
            let lists = distance_correlation_lists(&e, &c, metric_emb, metric_cond)?;
            let stats = correlation_stats(&lists)?;
            if let Some(csv_path) = csv {
                let mut text = String::from("i,j,dist_emb,dist_cond\n");
                for (idx, &(i, j)) in lists.pair_index.iter().enumerate() {
                    text.push_str(&format!(
                        "{i},{j},{},{}\n",
                        lists.e[idx], lists.c[idx]
                    ));
                }
                write_text(&csv_path, &text, global.quiet, "distance lists")?;
            }
            let result = json!({
                "metric": "distance_correlation",
                "pearson": stats.pearson,
                "spearman": stats.spearman,
                "n_items": e.n_rows(),
                "n_pairs": lists.e.len(),
                "metric_emb": metric_emb,
                "metric_cond": metric_cond,
            });
            emit(manifest, result, global.out.as_deref(), global.quiet)
        }
        AlignCmd::Randn { n, d, out_file } => {
            let matrix = random_baseline(n, d, global.seed)?;
            save_embeddings(&matrix, &out_file, parse_format(&global.format)?)?;
            if !global.quiet {
                eprintln!("baseline matrix written to {}", out_file.display());
            }
            let result = json!({
                "metric": "randn",
                "n_items": n,
                "d": d,
                "seed": global.seed,
                "file": out_file.display().to_string(),
            });
            emit(manifest, result, global.out.as_deref(), global.quiet)
        }
    }
}

use std::path::PathBuf;

use clap::Args;
use serde_json::json;
use smx_core::{
    expand_quads, mine_pairs, mine_triples, verify_stochastic, Direction, DistanceMetric,
    MpletReport, Reducer, Tiling,
};

use super::{load_matrix, with_suffix, write_text};
use crate::report::{emit, ManifestBuilder};
use crate::GlobalOpts;

#[derive(Args)]
pub struct MineArgs {
    #[arg(long)]
    pub embeddings: PathBuf,

    #[arg(long, default_value = "cosine", value_parser = clap::value_parser!(DistanceMetric))]
    pub metric: DistanceMetric,

    /// Subset size: 2 (pairs), 3 (triples), or 4 (greedy quads)
    #[arg(short, long, default_value_t = 2)]
    pub m: usize,

    #[arg(long, default_value = "sum", value_parser = clap::value_parser!(Reducer))]
    pub reducer: Reducer,

    #[arg(long, default_value = "max", value_parser = clap::value_parser!(Direction))]
    pub direction: Direction,

    #[arg(long, default_value_t = 100)]
    pub topk: usize,

    /// Upper-triangle block size for pair mining
    #[arg(long, default_value_t = 512)]
    pub block: usize,

    #[arg(long, default_value_t = 512)]
    pub tile_i: usize,

    #[arg(long, default_value_t = 512)]
    pub tile_j: usize,

    #[arg(long, default_value_t = 4096)]
    pub cols_per_batch: usize,

    /// Candidates kept per pair-column (M)
    #[arg(long = "per-column", default_value_t = 1)]
    pub per_column: usize,

    /// Re-harvest frontier columns to certify full exactness
    #[arg(long)]
    pub exact_merge: bool,

    /// Run the stochastic verifier with this many samples
    #[arg(long)]
    pub verify: Option<usize>,

    /// Entries CSV path (default: report path with .csv extension)
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn entries_csv(report: &MpletReport) -> String {
    let mut header: Vec<String> = (0..report.m).map(|i| format!("i{i}")).collect();
    header.push("score".into());
    let mut text = header.join(",");
    text.push('\n');
    for entry in &report.entries {
        let mut row: Vec<String> = entry.indices.iter().map(|i| i.to_string()).collect();
        row.push(format!("{}", entry.score));
        text.push_str(&row.join(","));
        text.push('\n');
    }
    text
}

pub fn run(args: MineArgs, global: &GlobalOpts) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::new("mine", global.seed);
    let e = load_matrix(&args.embeddings, global, &mut manifest)?;
    let tiling = Tiling {
        tile_i: args.tile_i,
        tile_j: args.tile_j,
        columns_per_batch: args.cols_per_batch,
        candidates_per_column: args.per_column,
    };
    let (report, stats) = match args.m {
        2 => {
            if args.reducer == Reducer::Std {
                anyhow::bail!(smx_core::Error::InvalidArgument(
                    "std reducer is degenerate for pairs (single distance)".into()
                ));
            }
            mine_pairs(&e, args.metric, args.direction, args.topk, args.block)?
        }
        3 => mine_triples(
            &e,
            args.metric,
            args.reducer,
            args.direction,
            args.topk,
            tiling,
            args.exact_merge,
        )?,
        4 => {
            let (triples, triple_stats) = mine_triples(
                &e,
                args.metric,
                args.reducer,
                args.direction,
                args.topk,
                tiling,
                args.exact_merge,
            )?;
            let (quads, quad_stats) =
                expand_quads(&triples, &e, args.metric, args.reducer, args.direction)?;
            manifest.stats(json!({ "triples": triple_stats, "quads": quad_stats }));
            let verification = match args.verify {
                Some(samples) => Some(verify_stochastic(&e, &quads, samples, global.seed)?),
                None => None,
            };
            let csv_path = args
                .csv
                .clone()
                .or_else(|| global.out.as_deref().map(|o| with_suffix(o, ".csv")));
            if let Some(path) = csv_path {
                write_text(&path, &entries_csv(&quads), global.quiet, "entries")?;
            }
            let result = json!({ "report": quads, "verification": verification });
            return emit(manifest, result, global.out.as_deref(), global.quiet);
        }
        other => anyhow::bail!(smx_core::Error::InvalidArgument(format!(
            "m must be 2, 3, or 4, got {other}"
        ))),
    };
    if !global.quiet {
        eprintln!(
            "mined {} columns, {} evaluations in {:.3}s ({:.3e} evals/s)",
            stats.columns, stats.evaluations, stats.elapsed_secs, stats.evals_per_sec
        );
    }
    manifest.stats(stats);
    let verification = match args.verify {
        Some(samples) => Some(verify_stochastic(&e, &report, samples, global.seed)?),
        None => None,
    };
    let csv_path = args
        .csv
        .or_else(|| global.out.as_deref().map(|o| with_suffix(o, ".csv")));
    if let Some(path) = csv_path {
        write_text(&path, &entries_csv(&report), global.quiet, "entries")?;
    }
    let result = json!({ "report": report, "verification": verification });
    emit(manifest, result, global.out.as_deref(), global.quiet)
}

use std::path::PathBuf;

use clap::Args;
use serde_json::json;
use smx_core::{
    pairing_manifest, select_pairs, DistanceMetric, SelectionResult, SelectionSpec,
    SelectionStrategy,
};

use super::{load_matrix, with_suffix, write_text};
use crate::report::{emit, ManifestBuilder};
use crate::GlobalOpts;

#[derive(Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub embeddings: PathBuf,

    /// Condition matrix, required by condition-space and combined strategies
    #[arg(long)]
    pub conditions: Option<PathBuf>,

    #[arg(long, value_parser = clap::value_parser!(SelectionStrategy))]
    pub strategy: SelectionStrategy,

    /// Condition-space metric (cosine or l2)
    #[arg(long, default_value = "cosine", value_parser = clap::value_parser!(DistanceMetric))]
    pub metric_cond: DistanceMetric,

    #[arg(long, default_value_t = 100)]
    pub count: usize,

    /// Also emit a generation manifest with this many samples per tuple
    #[arg(long)]
    pub samples_per_pair: Option<usize>,
}

fn tuples_csv(result: &SelectionResult) -> String {
    let m = result.tuples.first().map_or(2, |t| t.len());
    let mut header: Vec<String> = (0..m).map(|i| format!("i{i}")).collect();
    header.push("score".into());
    let mut text = header.join(",");
    text.push('\n');
    for (tuple, score) in result.tuples.iter().zip(&result.scores) {
        let mut row: Vec<String> = tuple.iter().map(|i| i.to_string()).collect();
        row.push(format!("{score}"));
        text.push_str(&row.join(","));
        text.push('\n');
    }
    text
}

pub fn run(args: SelectArgs, global: &GlobalOpts) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::new("select", global.seed);
    let embeddings = load_matrix(&args.embeddings, global, &mut manifest)?;
    let conditions = match &args.conditions {
        Some(path) => Some(load_matrix(path, global, &mut manifest)?),
        None => None,
    };
    let spec = SelectionSpec {
        strategy: args.strategy,
        metric_embed: DistanceMetric::Cosine,
        metric_cond: args.metric_cond,
        count: args.count,
        seed: global.seed,
    };
    let result = select_pairs(&embeddings, conditions.as_ref(), &spec)?;

    let out_csv = global
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("pairs.csv"));
    write_text(&out_csv, &tuples_csv(&result), global.quiet, "selection")?;

    let manifest_rows = match args.samples_per_pair {
        Some(per_pair) => {
            let rows = pairing_manifest(&result, per_pair, global.seed)?;
            let m = result.tuples.first().map_or(2, |t| t.len());
            let mut header: Vec<String> = (0..m).map(|i| format!("i{i}")).collect();
            header.push("sample_index".into());
            header.push("seed".into());
            let mut text = header.join(",");
            text.push('\n');
            for row in &rows {
                let mut cells: Vec<String> = row.tuple.iter().map(|i| i.to_string()).collect();
                cells.push(row.sample_index.to_string());
                cells.push(row.derived_seed.to_string());
                text.push_str(&cells.join(","));
                text.push('\n');
            }
            let path = with_suffix(&out_csv, "_manifest.csv");
            write_text(&path, &text, global.quiet, "generation manifest")?;
            Some(rows.len())
        }
        None => None,
    };

    let summary = json!({
        "strategy": args.strategy,
        "count": result.tuples.len(),
        "mean_embed_distance": result.mean_embed_distance,
        "mean_cond_distance": result.mean_cond_distance,
        "manifest_rows": manifest_rows,
        "tuples_csv": out_csv.display().to_string(),
    });
    emit(
        manifest,
        summary,
        Some(&with_suffix(&out_csv, ".json")),
        global.quiet,
    )
}

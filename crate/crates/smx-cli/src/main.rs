//! One binary, subcommand style: align, mine, theorem, sample, select,
//! genmetrics, convert. Reports are JSON-first with CSV sidecars for tabular
//! payloads. Exit codes: 0 success, 1 domain error (with machine-readable
//! error JSON on stdout), 2 usage error.

mod classspec;
mod cmd;
mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "smx", version, about = "Score-mixing analysis toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalOpts {
    /// Base seed for all randomness; every stream derives from it
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (overrides SMX_THREADS; default hardware parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output path: JSON report, or the primary CSV for sample/select/convert
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Embedding file format for inputs
    #[arg(long, global = true, default_value = "binary")]
    format: String,

    /// Suppress notes on stderr
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Alignment metrics between two embedding spaces
    #[command(subcommand)]
    Align(cmd::align::AlignCmd),
    /// Mine extreme m-plets (pairs, triples, quads)
    Mine(cmd::mine::MineArgs),
    /// Order-preservation probabilities, bounds, simulation, and overlap
    #[command(subcommand)]
    Theorem(cmd::theorem::TheoremCmd),
    /// Sample from mixed class-conditional scores
    Sample(cmd::sample::SampleArgs),
    /// Select class pairs or triples for mixing
    Select(cmd::select::SelectArgs),
    /// Generator-evaluation metrics over class feature sets
    Genmetrics(cmd::genmetrics::GenmetricsArgs),
    /// Convert embedding files between binary and CSV
    Convert(cmd::convert::ConvertArgs),
}

fn init_threads(requested: Option<usize>) {
    let from_env = std::env::var("SMX_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(n) = requested.or(from_env) {
        if n >= 1 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .ok();
        }
    }
}

fn error_code(err: &anyhow::Error) -> &'static str {
    match err.downcast_ref::<smx_core::Error>() {
        Some(core_err) => core_err.code(),
        None => "error",
    }
}

fn main() {
    let cli = Cli::parse();
    init_threads(cli.global.threads);
    let subcommand = match &cli.command {
        Command::Align(_) => "align",
        Command::Mine(_) => "mine",
        Command::Theorem(_) => "theorem",
        Command::Sample(_) => "sample",
        Command::Select(_) => "select",
        Command::Genmetrics(_) => "genmetrics",
        Command::Convert(_) => "convert",
    };
    let outcome = match cli.command {
        Command::Align(args) => cmd::align::run(args, &cli.global),
        Command::Mine(args) => cmd::mine::run(args, &cli.global),
        Command::Theorem(args) => cmd::theorem::run(args, &cli.global),
        Command::Sample(args) => cmd::sample::run(args, &cli.global),
        Command::Select(args) => cmd::select::run(args, &cli.global),
        Command::Genmetrics(args) => cmd::genmetrics::run(args, &cli.global),
        Command::Convert(args) => cmd::convert::run(args, &cli.global),
    };
    if let Err(err) = outcome {
        let payload = serde_json::json!({
            "code": error_code(&err),
            "message": format!("{err:#}"),
            "context": { "subcommand": subcommand },
        });
        println!("{payload}");
        std::process::exit(1);
    }
}

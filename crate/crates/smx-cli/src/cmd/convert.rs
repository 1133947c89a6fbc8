use std::path::PathBuf;

use clap::Args;
use smx_core::{load_embeddings, save_embeddings, FileFormat};

use crate::GlobalOpts;

#[derive(Args)]
pub struct ConvertArgs {
    /// Input embedding file
    #[arg(long = "in")]
    pub input: PathBuf,

    #[arg(long, value_parser = clap::value_parser!(FileFormat))]
    pub in_format: FileFormat,

    #[arg(long, value_parser = clap::value_parser!(FileFormat))]
    pub out_format: FileFormat,
}

pub fn run(args: ConvertArgs, global: &GlobalOpts) -> anyhow::Result<()> {
    let out = global.out.clone().ok_or_else(|| {
        smx_core::Error::InvalidArgument("convert needs --out for the destination file".into())
    })?;
    let matrix = load_embeddings(&args.input, args.in_format, None)?;
    save_embeddings(&matrix, &out, args.out_format)?;
    if !global.quiet {
        eprintln!(
            "converted {} ({} x {}) to {}",
            args.input.display(),
            matrix.n_rows(),
            matrix.n_cols(),
            out.display()
        );
    }
    Ok(())
}

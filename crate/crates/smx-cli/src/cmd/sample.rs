use std::path::PathBuf;

use clap::Args;
use serde_json::json;
use smx_core::{
    analytic_score, grid_sweep, guided_score, heun_sample, karras_schedule, log_density,
    mixed_score, GaussianClass, MixSpec, SampleBatch, ScheduleSummary,
};

use super::{with_suffix, write_text};
use crate::classspec::parse_class;
use crate::report::{emit, ManifestBuilder};
use crate::GlobalOpts;

#[derive(Args)]
pub struct SampleArgs {
    /// Class A: inline spec or spec file
    #[arg(long)]
    pub class_a: String,

    /// Class B: inline spec or spec file
    #[arg(long)]
    pub class_b: String,

    #[arg(long, requires = "beta")]
    pub alpha: Option<f64>,

    #[arg(long, requires = "alpha")]
    pub beta: Option<f64>,

    /// Convex mix: alpha = 1 − lambda, beta = lambda (default 0.5)
    #[arg(long, conflicts_with_all = ["alpha", "beta"])]
    pub lambda: Option<f64>,

    /// Guidance scale g: score = weak + g (mix − weak)
    #[arg(long, requires = "weak_class", conflicts_with = "grid")]
    pub guidance: Option<f64>,

    /// Weak reference class for guidance
    #[arg(long)]
    pub weak_class: Option<String>,

    #[arg(long, default_value_t = 64)]
    pub steps: usize,

    #[arg(long, default_value_t = 0.002)]
    pub sigma_min: f64,

    #[arg(long, default_value_t = 80.0)]
    pub sigma_max: f64,

    #[arg(long, default_value_t = 7.0)]
    pub rho_s: f64,

    /// Samples per cell
    #[arg(short, long, default_value_t = 16)]
    pub n: usize,

    /// Weight grid "a0:a1:step,b0:b1:step"; initial noise is fixed across cells
    #[arg(long)]
    pub grid: Option<String>,
}

fn parse_range(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        anyhow::bail!(smx_core::Error::InvalidArgument(format!(
            "range must be start:end:step, got {spec:?}"
        )));
    }
    let start: f64 = parts[0].trim().parse()?;
    let end: f64 = parts[1].trim().parse()?;
    let step: f64 = parts[2].trim().parse()?;
    if step <= 0.0 || end < start {
        anyhow::bail!(smx_core::Error::InvalidArgument(format!(
            "range {spec:?} must have positive step and end >= start"
        )));
    }
    let mut values = Vec::new();
    let mut idx = 0usize;
    loop {
        let v = start + idx as f64 * step;
        if v > end + 1e-9 {
            break;
        }
        values.push(v);
        idx += 1;
    }
    Ok(values)
}

fn parse_grid(spec: &str) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        anyhow::bail!(smx_core::Error::InvalidArgument(format!(
            "grid must be a0:a1:step,b0:b1:step, got {spec:?}"
        )));
    }
    Ok((parse_range(parts[0])?, parse_range(parts[1])?))
}

/// Mixture reference density log((α p_A + β p_B)/(α+β)); falls back to the
/// even mixture when both weights are zero.
fn log_density_mix(
    x: &[f64],
    a: &GaussianClass,
    b: &GaussianClass,
    alpha: f64,
    beta: f64,
) -> anyhow::Result<f64> {
    let (wa, wb) = if alpha + beta > 0.0 {
        (alpha, beta)
    } else {
        (0.5, 0.5)
    };
    let la = log_density(x, a)?;
    let lb = log_density(x, b)?;
    let (ta, tb) = (wa.ln() + la, wb.ln() + lb);
    let hi = ta.max(tb);
    Ok(hi + ((ta - hi).exp() + (tb - hi).exp()).ln() - (wa + wb).ln())
}

fn points_csv(
    cells: &[(f64, f64, &SampleBatch)],
    class_a: &GaussianClass,
    class_b: &GaussianClass,
) -> anyhow::Result<String> {
    let dim = class_a.dim();
    let mut header = vec![
        "cell_alpha".to_string(),
        "cell_beta".to_string(),
        "sample_index".to_string(),
    ];
    header.extend((0..dim).map(|i| format!("x_{i}")));
    header.push("log_density_a".into());
    header.push("log_density_b".into());
    header.push("log_density_mix_reference".into());
    let mut text = header.join(",");
    text.push('\n');
    for &(alpha, beta, batch) in cells {
        for (idx, point) in batch.points.iter().enumerate() {
            let mut row = vec![format!("{alpha}"), format!("{beta}"), idx.to_string()];
            row.extend(point.iter().map(|v| format!("{v}")));
            row.push(format!("{}", log_density(point, class_a)?));
            row.push(format!("{}", log_density(point, class_b)?));
            row.push(format!("{}", log_density_mix(point, class_a, class_b, alpha, beta)?));
            text.push_str(&row.join(","));
            text.push('\n');
        }
    }
    Ok(text)
}

pub fn run(args: SampleArgs, global: &GlobalOpts) -> anyhow::Result<()> {
    let manifest = ManifestBuilder::new("sample", global.seed);
    let class_a = parse_class(&args.class_a)?;
    let class_b = parse_class(&args.class_b)?;
    if class_a.dim() != class_b.dim() {
        anyhow::bail!(smx_core::Error::DimensionMismatch {
            left: class_a.dim(),
            right: class_b.dim(),
        });
    }
    let schedule = karras_schedule(args.sigma_min, args.sigma_max, args.steps, args.rho_s)?;
    let out_csv = global
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("points.csv"));

    if let Some(grid_spec) = &args.grid {
        let (alphas, betas) = parse_grid(grid_spec)?;
        let grid = grid_sweep(
            &class_a, &class_b, &alphas, &betas, &schedule, args.n, global.seed,
        )?;
        let mut cells = Vec::new();
        for (bi, beta) in betas.iter().enumerate() {
            for (ai, alpha) in alphas.iter().enumerate() {
                cells.push((*alpha, *beta, &grid[bi][ai]));
            }
        }
        let csv = points_csv(&cells, &class_a, &class_b)?;
        write_text(&out_csv, &csv, global.quiet, "points")?;
        let result = json!({
            "mode": "grid",
            "alphas": alphas,
            "betas": betas,
            "n_per_cell": args.n,
            "schedule": ScheduleSummary::from(&schedule),
            "points_csv": out_csv.display().to_string(),
        });
        return emit(
            manifest,
            result,
            Some(&with_suffix(&out_csv, ".json")),
            global.quiet,
        );
    }

    let spec = match (args.lambda, args.alpha, args.beta) {
        (Some(lambda), _, _) => MixSpec::from_lambda(lambda)?,
        (None, Some(alpha), Some(beta)) => MixSpec::new(alpha, beta)?,
        // lambda = 0.5 by default
        _ => MixSpec::from_lambda(0.5)?,
    };
    let weak = match (&args.guidance, &args.weak_class) {
        (Some(_), Some(spec_str)) => {
            let weak = parse_class(spec_str)?;
            if weak.dim() != class_a.dim() {
                anyhow::bail!(smx_core::Error::DimensionMismatch {
                    left: weak.dim(),
                    right: class_a.dim(),
                });
            }
            Some(weak)
        }
        _ => None,
    };
    let g = args.guidance.unwrap_or(1.0);
    let score_fn = |x: &[f64], sigma: f64| -> Vec<f64> {
        let mix = mixed_score(x, sigma, &class_a, &class_b, &spec)
            .expect("dimensions checked at entry");
        match &weak {
            Some(weak_class) => {
                let sw = analytic_score(x, sigma, weak_class)
                    .expect("dimensions checked at entry");
                guided_score(&mix, &sw, g).expect("same dimension")
            }
            None => mix,
        }
    };
    let mut batch = heun_sample(&score_fn, &schedule, class_a.dim(), args.n, global.seed)?;
    batch.spec = Some(spec);
    let cells = vec![(spec.alpha, spec.beta, &batch)];
    let csv = points_csv(&cells, &class_a, &class_b)?;
    write_text(&out_csv, &csv, global.quiet, "points")?;
    let result = json!({
        "mode": "single",
        "spec": spec,
        "guidance": args.guidance,
        "n": args.n,
        "schedule": ScheduleSummary::from(&schedule),
        "points_csv": out_csv.display().to_string(),
    });
    emit(
        manifest,
        result,
        Some(&with_suffix(&out_csv, ".json")),
        global.quiet,
    )
}

//! Gaussian class specifications, inline or from a text file.
//!
//! Inline grammar: components joined by '+', each component
//! `weight;m1,m2,...;c11,c12|c21,c22`. The covariance section is either d
//! rows of d values separated by '|', or a single value for an isotropic
//! covariance. A single-component class may omit the weight section
//! (`m1,m2;cov` is read as weight 1).
//!
//! File format: components separated by blank lines; per component one line
//! with the weight, one line with the comma-separated mean, then d lines of
//! covariance rows. A single covariance value again means isotropic.

use std::path::Path;

use anyhow::{bail, Context};
use smx_core::{GaussianClass, GaussianComponent};

fn parse_vector(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid real number {:?}", v.trim()))
        })
        .collect()
}

fn parse_covariance(rows: &[String], d: usize) -> anyhow::Result<Vec<f64>> {
    if rows.len() == 1 {
        let values = parse_vector(&rows[0])?;
        if values.len() == 1 {
            // isotropic shorthand
            let mut cov = vec![0.0; d * d];
            for i in 0..d {
                cov[i * d + i] = values[0];
            }
            return Ok(cov);
        }
        if values.len() == d && d == 1 {
            return Ok(values);
        }
        bail!(
            "covariance needs {d} rows of {d} values or a single isotropic value, got one row of {}",
            values.len()
        );
    }
    if rows.len() != d {
        bail!("covariance needs {d} rows, got {}", rows.len());
    }
    let mut cov = Vec::with_capacity(d * d);
    for row in rows {
        let values = parse_vector(row)?;
        if values.len() != d {
            bail!("covariance row has {} values, expected {d}", values.len());
        }
        cov.extend(values);
    }
    Ok(cov)
}

fn parse_inline_component(s: &str) -> anyhow::Result<GaussianComponent> {
    let parts: Vec<&str> = s.split(';').collect();
    let (weight, mean_str, cov_str) = match parts.len() {
        2 => (1.0, parts[0], parts[1]),
        3 => (
            parts[0]
                .trim()
                .parse::<f64>()
                .with_context(|| format!("invalid weight {:?}", parts[0]))?,
            parts[1],
            parts[2],
        ),
        _ => bail!("component {s:?} must be weight;mean;cov or mean;cov"),
    };
    let mean = parse_vector(mean_str)?;
    let rows: Vec<String> = cov_str.split('|').map(|r| r.to_string()).collect();
    let covariance = parse_covariance(&rows, mean.len())?;
    Ok(GaussianComponent {
        weight,
        mean,
        covariance,
    })
}

fn parse_inline(s: &str) -> anyhow::Result<GaussianClass> {
    let components = s
        .split('+')
        .map(parse_inline_component)
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(GaussianClass::new(components)?)
}

fn parse_file(path: &Path) -> anyhow::Result<GaussianClass> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read class spec {}", path.display()))?;
    let mut components = Vec::new();
    for block in text.split("\n\n") {
        let lines: Vec<String> = block
            .lines()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        if lines.is_empty() {
            continue;
        }
        if lines.len() < 3 {
            bail!(
                "{}: component block needs weight, mean, and covariance lines",
                path.display()
            );
        }
        let weight = lines[0]
            .parse::<f64>()
            .with_context(|| format!("invalid weight {:?}", lines[0]))?;
        let mean = parse_vector(&lines[1])?;
        let covariance = parse_covariance(&lines[2..], mean.len())?;
        components.push(GaussianComponent {
            weight,
            mean,
            covariance,
        });
    }
    Ok(GaussianClass::new(components)?)
}

/// Parse a class spec: a path to a spec file, or the inline grammar.
pub fn parse_class(spec: &str) -> anyhow::Result<GaussianClass> {
    let path = Path::new(spec);
    if path.exists() {
        parse_file(path)
    } else {
        parse_inline(spec).with_context(|| {
            format!("class spec {spec:?} is neither an existing file nor valid inline syntax")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_isotropic() {
        let c = parse_class("1;0,0;1").unwrap();
        assert_eq!(c.dim(), 2);
        assert_eq!(c.components()[0].covariance, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn inline_no_weight() {
        let c = parse_class("2,1;0.5").unwrap();
        assert_eq!(c.dim(), 2);
        assert_eq!(c.components()[0].weight, 1.0);
        assert_eq!(c.components()[0].mean, vec![2.0, 1.0]);
    }

    #[test]
    fn inline_full_covariance_and_mixture() {
        let c = parse_class("0.3;1,0;1,0.2|0.2,2+0.7;-1,1;0.5").unwrap();
        assert_eq!(c.components().len(), 2);
        assert_eq!(c.components()[0].covariance, vec![1.0, 0.2, 0.2, 2.0]);
        assert_eq!(c.components()[1].covariance, vec![0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn file_spec() {
        let dir = std::env::temp_dir();
        let path = dir.join(format!("smx_classspec_{}.txt", std::process::id()));
        std::fs::write(&path, "0.5\n1,0\n1,0\n0,1\n\n0.5\n-1,0\n2\n").unwrap();
        let c = parse_class(path.to_str().unwrap()).unwrap();
        assert_eq!(c.components().len(), 2);
        assert_eq!(c.components()[1].covariance, vec![2.0, 0.0, 0.0, 2.0]);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn bad_weights_rejected() {
        assert!(parse_class("0.5;0,0;1").is_err());
    }
}

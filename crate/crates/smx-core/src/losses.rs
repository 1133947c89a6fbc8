//! Loss weights and generator-evaluation metrics over class feature sets:
//! SNR and curriculum weights, the alignment loss, the total-loss combiner,
//! and fidelity/diversity/bias/coverage metrics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{dot, norm, EmbeddingMatrix};

/// Hyperparameters of the weighted loss combination.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LossWeights {
    pub k_snr: f64,
    pub n_start: u64,
    pub n_ramp: u64,
    pub lambda_align: f64,
    pub sigma_data: f64,
}

/// SNR-aware weight exp(−k σ²); in (0, 1], strictly decreasing in σ.
pub fn snr_weight(sigma: f64, k: f64) -> f64 {
    debug_assert!(k > 0.0);
    (-k * sigma * sigma).exp()
}

/// Curriculum ramp min(max(0, (n_cur − n_start)/n_ramp), 1).
pub fn ramp_weight(n_cur: u64, n_start: u64, n_ramp: u64) -> f64 {
    debug_assert!(n_ramp >= 1);
    ((n_cur as f64 - n_start as f64) / n_ramp as f64).clamp(0.0, 1.0)
}

/// Loss prefactor (σ² + σ_data²)/(σ·σ_data)²; symmetric in its arguments.
pub fn edm2_weight(sigma: f64, sigma_data: f64) -> Result<f64> {
    if sigma <= 0.0 || sigma_data <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sigma and sigma_data must be positive, got {sigma}, {sigma_data}"
        )));
    }
    Ok((sigma * sigma + sigma_data * sigma_data) / (sigma * sigma * sigma_data * sigma_data))
}

/// Alignment loss 1 − cos(f, c), in [0, 2]. Inputs are normalized internally.
pub fn alignment_loss(f: &[f64], c: &[f64]) -> Result<f64> {
    if f.len() != c.len() {
        return Err(Error::DimensionMismatch {
            left: f.len(),
            right: c.len(),
        });
    }
    let nf = norm(f);
    let nc = norm(c);
    if nf <= 1e-12 || nc <= 1e-12 {
        return Err(Error::ZeroNormRow { row: usize::MAX });
    }
    Ok(1.0 - dot(f, c) / (nf * nc))
}

/// Total loss l_diff + λ · w_ramp · w_snr(σ) · l_align.
pub fn total_loss_combine(
    l_diff: f64,
    l_align: f64,
    weights: &LossWeights,
    sigma: f64,
    n_cur: u64,
) -> f64 {
    l_diff
        + weights.lambda_align
            * ramp_weight(n_cur, weights.n_start, weights.n_ramp)
            * snr_weight(sigma, weights.k_snr)
            * l_align
}

/// Unit-normalized per-class features with their target centers.
#[derive(Debug, Clone)]
pub struct ClassFeatureSet {
    class_ids: Vec<String>,
    /// Per class, per sample, unit-norm feature vectors.
    features: Vec<Vec<Vec<f64>>>,
    /// Unit-norm target center per evaluated class.
    target_centers: Vec<Vec<f64>>,
    /// Every target row (may exceed the evaluated classes), unit-norm.
    all_targets: Vec<Vec<f64>>,
    all_target_ids: Vec<String>,
}

impl ClassFeatureSet {
    /// Group features by label (first-appearance order) and pair each class
    /// with its target center.
    ///
    /// When `target_labels` is absent, target rows must align with the
    /// distinct feature labels in order. Every vector is re-normalized on
    /// ingest; the metric definitions presuppose unit norm.
    pub fn new(
        features: &EmbeddingMatrix,
        labels: &[String],
        targets: &EmbeddingMatrix,
        target_labels: Option<&[String]>,
    ) -> Result<Self> {
        if labels.len() != features.n_rows() {
            return Err(Error::LabelMismatch {
                labels: labels.len(),
                rows: features.n_rows(),
            });
        }
        if features.n_cols() != targets.n_cols() {
            return Err(Error::DimensionMismatch {
                left: features.n_cols(),
                right: targets.n_cols(),
            });
        }
        let unit = |row: &[f64], what: &str| -> Result<Vec<f64>> {
            let nrm = norm(row);
            if nrm <= 1e-12 {
                return Err(Error::InvalidArgument(format!("zero-norm {what} vector")));
            }
            Ok(row.iter().map(|v| v / nrm).collect())
        };

        let mut class_ids: Vec<String> = Vec::new();
        let mut index = std::collections::HashMap::new();
        let mut grouped: Vec<Vec<Vec<f64>>> = Vec::new();
        for (i, label) in labels.iter().enumerate() {
            let k = *index.entry(label.clone()).or_insert_with(|| {
                class_ids.push(label.clone());
                grouped.push(Vec::new());
                grouped.len() - 1
            });
            grouped[k].push(unit(features.row(i), "feature")?);
        }

        let all_target_ids: Vec<String> = match target_labels {
            Some(tl) => {
                if tl.len() != targets.n_rows() {
                    return Err(Error::LabelMismatch {
                        labels: tl.len(),
                        rows: targets.n_rows(),
                    });
                }
                tl.to_vec()
            }
            None => {
                if targets.n_rows() != class_ids.len() {
                    return Err(Error::LabelMismatch {
                        labels: class_ids.len(),
                        rows: targets.n_rows(),
                    });
                }
                class_ids.clone()
            }
        };
        let mut all_targets = Vec::with_capacity(targets.n_rows());
        for i in 0..targets.n_rows() {
            all_targets.push(unit(targets.row(i), "target")?);
        }
        let target_index: std::collections::HashMap<&str, usize> = all_target_ids
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let mut target_centers = Vec::with_capacity(class_ids.len());
        for id in &class_ids {
            let &row = target_index.get(id.as_str()).ok_or_else(|| {
                Error::InvalidArgument(format!("class {id:?} has no target center"))
            })?;
            target_centers.push(all_targets[row].clone());
        }
        Ok(ClassFeatureSet {
            class_ids,
            features: grouped,
            target_centers,
            all_targets,
            all_target_ids,
        })
    }

    pub fn class_ids(&self) -> &[String] {
        &self.class_ids
    }
}

/// Per-class generator-evaluation metrics.
#[derive(Debug, Clone, Serialize)]
pub struct ClassMetrics {
    pub class_id: String,
    /// Mean cosine distance of samples to the target center (fidelity).
    pub m_align: f64,
    /// Mean cosine similarity of samples to their generated centroid
    /// (diversity; lower means more diverse).
    pub m_ics: f64,
    /// Cosine distance between generated and target centers (bias).
    pub m_shift: f64,
}

/// Evaluation summary across classes.
#[derive(Debug, Clone, Serialize)]
pub struct EvalMetrics {
    pub per_class: Vec<ClassMetrics>,
    /// Fraction of classes whose generated centroid is nearest its own
    /// target center.
    pub m_coverage: f64,
    pub mean_align: f64,
    pub std_align: f64,
    pub mean_ics: f64,
    pub std_ics: f64,
    pub mean_shift: f64,
    pub std_shift: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Fidelity, diversity, bias, and coverage over a class feature set.
///
/// With `strict_coverage` the nearest-center argmax runs over every target
/// row instead of just the evaluated classes.
pub fn eval_metrics(set: &ClassFeatureSet, strict_coverage: bool) -> Result<EvalMetrics> {
    let k_eval = set.class_ids.len();
    let mut per_class = Vec::with_capacity(k_eval);
    let mut gen_centers = Vec::with_capacity(k_eval);
    for (k, feats) in set.features.iter().enumerate() {
        let d = feats[0].len();
        let mut mean = vec![0.0; d];
        for f in feats {
            for (m, v) in mean.iter_mut().zip(f) {
                *m += v / feats.len() as f64;
            }
        }
        let nrm = norm(&mean);
        if nrm <= 1e-12 {
            return Err(Error::DegenerateClassCenter {
                label: set.class_ids[k].clone(),
            });
        }
        let c_gen: Vec<f64> = mean.iter().map(|v| v / nrm).collect();
        let c_target = &set.target_centers[k];
        let m_align = feats
            .iter()
            .map(|f| 1.0 - dot(f, c_target))
            .sum::<f64>()
            / feats.len() as f64;
        let m_ics = feats.iter().map(|f| dot(f, &c_gen)).sum::<f64>() / feats.len() as f64;
        let m_shift = 1.0 - dot(&c_gen, c_target);
        per_class.push(ClassMetrics {
            class_id: set.class_ids[k].clone(),
            m_align,
            m_ics,
            m_shift,
        });
        gen_centers.push(c_gen);
    }

    let mut hits = 0usize;
    for (k, c_gen) in gen_centers.iter().enumerate() {
        let own_id = &set.class_ids[k];
        let (candidates, ids): (&[Vec<f64>], &[String]) = if strict_coverage {
            (&set.all_targets, &set.all_target_ids)
        } else {
            (&set.target_centers, &set.class_ids)
        };
        let mut best = 0usize;
        let mut best_sim = f64::NEG_INFINITY;
        for (j, target) in candidates.iter().enumerate() {
            let sim = dot(c_gen, target);
            if sim > best_sim {
                best_sim = sim;
                best = j;
            }
        }
        if &ids[best] == own_id {
            hits += 1;
        }
    }

    let aligns: Vec<f64> = per_class.iter().map(|c| c.m_align).collect();
    let icss: Vec<f64> = per_class.iter().map(|c| c.m_ics).collect();
    let shifts: Vec<f64> = per_class.iter().map(|c| c.m_shift).collect();
    let (mean_align, std_align) = mean_std(&aligns);
    let (mean_ics, std_ics) = mean_std(&icss);
    let (mean_shift, std_shift) = mean_std(&shifts);
    Ok(EvalMetrics {
        per_class,
        m_coverage: hits as f64 / k_eval as f64,
        mean_align,
        std_align,
        mean_ics,
        std_ics,
        mean_shift,
        std_shift,
    })
}

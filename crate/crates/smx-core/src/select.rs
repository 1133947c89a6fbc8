//! Class-pair and class-triple selection strategies: random, nearest or most
//! distant in either space, the combined rank-sum criterion, and manifest
//! generation for downstream sample generation.

use rand::SeedableRng;
use serde::Serialize;

use crate::distance::{distance, DistanceMetric};
use crate::error::{Error, Result};
use crate::matrix::EmbeddingMatrix;
use crate::miner::{mine_pairs, mine_triples, Direction, Reducer, Tiling};
use crate::seed::derive_seed;

/// How to pick the classes to mix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionStrategy {
    Random,
    CloseEmbed,
    DistEmbed,
    CloseCond,
    DistCond,
    CombinedTop,
    CombinedWorst,
    TriplesSumMax,
    TriplesSumMin,
}

impl std::str::FromStr for SelectionStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SelectionStrategy::Random),
            "close_embed" => Ok(SelectionStrategy::CloseEmbed),
            "dist_embed" => Ok(SelectionStrategy::DistEmbed),
            "close_cond" => Ok(SelectionStrategy::CloseCond),
            "dist_cond" => Ok(SelectionStrategy::DistCond),
            "combined_top" => Ok(SelectionStrategy::CombinedTop),
            "combined_worst" => Ok(SelectionStrategy::CombinedWorst),
            "triples_sum_max" => Ok(SelectionStrategy::TriplesSumMax),
            "triples_sum_min" => Ok(SelectionStrategy::TriplesSumMin),
            other => Err(Error::InvalidArgument(format!(
                "unknown strategy {other:?}"
            ))),
        }
    }
}

impl SelectionStrategy {
    pub fn needs_conditions(&self) -> bool {
        matches!(
            self,
            SelectionStrategy::CloseCond
                | SelectionStrategy::DistCond
                | SelectionStrategy::CombinedTop
                | SelectionStrategy::CombinedWorst
        )
    }
}

/// Full selection request.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionSpec {
    pub strategy: SelectionStrategy,
    pub metric_embed: DistanceMetric,
    pub metric_cond: DistanceMetric,
    pub count: usize,
    pub seed: u64,
}

impl SelectionSpec {
    pub fn new(strategy: SelectionStrategy, count: usize) -> Self {
        SelectionSpec {
            strategy,
            // the embedding space is compared with cosine distance
            metric_embed: DistanceMetric::Cosine,
            metric_cond: DistanceMetric::Cosine,
            count,
            seed: 0,
        }
    }
}

/// Selected tuples with their selection scores and summary distances.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionResult {
    pub tuples: Vec<Vec<usize>>,
    pub scores: Vec<f64>,
    pub mean_embed_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_cond_distance: Option<f64>,
}

fn mean_tuple_distance(
    e: &EmbeddingMatrix,
    tuples: &[Vec<usize>],
    metric: DistanceMetric,
) -> Result<f64> {
    if tuples.is_empty() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for t in tuples {
        let mut pairwise = 0.0;
        let mut pairs = 0usize;
        for a in 0..t.len() {
            for b in (a + 1)..t.len() {
                pairwise += distance(metric, e.row(t[a]), e.row(t[b]))?;
                pairs += 1;
            }
        }
        acc += pairwise / pairs as f64;
    }
    Ok(acc / tuples.len() as f64)
}

fn finish_result(
    tuples: Vec<Vec<usize>>,
    scores: Vec<f64>,
    embed: &EmbeddingMatrix,
    metric_embed: DistanceMetric,
    cond: Option<&EmbeddingMatrix>,
    metric_cond: DistanceMetric,
) -> Result<SelectionResult> {
    let mean_embed_distance = mean_tuple_distance(embed, &tuples, metric_embed)?;
    let mean_cond_distance = match cond {
        Some(c) => Some(mean_tuple_distance(c, &tuples, metric_cond)?),
        None => None,
    };
    Ok(SelectionResult {
        tuples,
        scores,
        mean_embed_distance,
        mean_cond_distance,
    })
}

/// Decode a lexicographic pair rank into (i, j) with i < j.
fn unrank_pair(rank: usize, n: usize) -> (usize, usize) {
    // pairs with first index < i: i*n − i(i+1)/2
    let count_before = |i: usize| i * n - i * (i + 1) / 2;
    let mut lo = 0usize;
    let mut hi = n - 1;
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if count_before(mid) <= rank {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let i = lo;
    let j = i + 1 + (rank - count_before(i));
    (i, j)
}

/// Select class pairs under the given strategy.
///
/// Condition-space strategies need `cond`; the combined strategies route
/// through [`select_combined`], triple strategies through [`select_triples`].
pub fn select_pairs(
    embed: &EmbeddingMatrix,
    cond: Option<&EmbeddingMatrix>,
    spec: &SelectionSpec,
) -> Result<SelectionResult> {
    let n = embed.n_rows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "selection needs at least 2 classes, got {n}"
        )));
    }
    if spec.strategy.needs_conditions() && cond.is_none() {
        return Err(Error::InvalidArgument(format!(
            "strategy {:?} needs a condition matrix",
            spec.strategy
        )));
    }
    if let Some(c) = cond {
        if c.n_rows() != n {
            return Err(Error::RowCountMismatch {
                left: n,
                right: c.n_rows(),
            });
        }
    }
    match spec.strategy {
        SelectionStrategy::TriplesSumMax => {
            return select_triples(embed, Direction::Max, spec.count)
        }
        SelectionStrategy::TriplesSumMin => {
            return select_triples(embed, Direction::Min, spec.count)
        }
        _ => {}
    }
    let total = n * (n - 1) / 2;
    if spec.count == 0 || spec.count > total {
        return Err(Error::TopKOutOfRange {
            top_k: spec.count,
            max: total,
        });
    }
    let (tuples, scores) = match spec.strategy {
        SelectionStrategy::Random => {
            let mut rng =
                rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[0]));
            let mut ranks = rand::seq::index::sample(&mut rng, total, spec.count).into_vec();
            ranks.sort_unstable();
            let tuples: Vec<Vec<usize>> = ranks
                .into_iter()
                .map(|r| {
                    let (i, j) = unrank_pair(r, n);
                    vec![i, j]
                })
                .collect();
            let scores = tuples
                .iter()
                .map(|t| distance(spec.metric_embed, embed.row(t[0]), embed.row(t[1])))
                .collect::<Result<Vec<f64>>>()?;
            (tuples, scores)
        }
        SelectionStrategy::CloseEmbed | SelectionStrategy::DistEmbed => {
            let direction = if spec.strategy == SelectionStrategy::CloseEmbed {
                Direction::Min
            } else {
                Direction::Max
            };
            let (report, _) = mine_pairs(embed, spec.metric_embed, direction, spec.count, 512)?;
            (
                report.entries.iter().map(|e| e.indices.clone()).collect(),
                report.entries.iter().map(|e| e.score).collect(),
            )
        }
        SelectionStrategy::CloseCond | SelectionStrategy::DistCond => {
            let direction = if spec.strategy == SelectionStrategy::CloseCond {
                Direction::Min
            } else {
                Direction::Max
            };
            let c = cond.expect("checked above");
            let (report, _) = mine_pairs(c, spec.metric_cond, direction, spec.count, 512)?;
            (
                report.entries.iter().map(|e| e.indices.clone()).collect(),
                report.entries.iter().map(|e| e.score).collect(),
            )
        }
        SelectionStrategy::CombinedTop | SelectionStrategy::CombinedWorst => {
            let which = if spec.strategy == SelectionStrategy::CombinedTop {
                CombinedWhich::Top
            } else {
                CombinedWhich::Worst
            };
            return select_combined(
                embed,
                cond.expect("checked above"),
                spec.metric_cond,
                spec.count,
                which,
            );
        }
        SelectionStrategy::TriplesSumMax | SelectionStrategy::TriplesSumMin => unreachable!(),
    };
    finish_result(tuples, scores, embed, spec.metric_embed, cond, spec.metric_cond)
}

/// Which end of the combined ranking to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CombinedWhich {
    Top,
    Worst,
}

/// Rank-sum combination: every pair is ranked by condition closeness
/// (ascending distance) and by embedding distance (descending), and scored by
/// the sum of the two ranks. "Top" keeps the smallest sums, "worst" the
/// largest. Embedding distances use cosine.
pub fn select_combined(
    embed: &EmbeddingMatrix,
    cond: &EmbeddingMatrix,
    metric_cond: DistanceMetric,
    count: usize,
    which: CombinedWhich,
) -> Result<SelectionResult> {
    let n = embed.n_rows();
    if cond.n_rows() != n {
        return Err(Error::RowCountMismatch {
            left: n,
            right: cond.n_rows(),
        });
    }
    let total = n * (n - 1) / 2;
    if count == 0 || count > total {
        return Err(Error::TopKOutOfRange {
            top_k: count,
            max: total,
        });
    }
    let mut pairs = Vec::with_capacity(total);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((
                i,
                j,
                distance(DistanceMetric::Cosine, embed.row(i), embed.row(j))?,
                distance(metric_cond, cond.row(i), cond.row(j))?,
            ));
        }
    }
    // ordinal ranks with deterministic tie resolution by pair index
    let mut by_cond: Vec<usize> = (0..total).collect();
    by_cond.sort_by(|&a, &b| {
        pairs[a]
            .3
            .total_cmp(&pairs[b].3)
            .then_with(|| (pairs[a].0, pairs[a].1).cmp(&(pairs[b].0, pairs[b].1)))
    });
    let mut by_embed: Vec<usize> = (0..total).collect();
    by_embed.sort_by(|&a, &b| {
        pairs[b]
            .2
            .total_cmp(&pairs[a].2)
            .then_with(|| (pairs[a].0, pairs[a].1).cmp(&(pairs[b].0, pairs[b].1)))
    });
    let mut rank_sum = vec![0usize; total];
    for (rank, &p) in by_cond.iter().enumerate() {
        rank_sum[p] += rank;
    }
    for (rank, &p) in by_embed.iter().enumerate() {
        rank_sum[p] += rank;
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| {
        let key = rank_sum[a].cmp(&rank_sum[b]);
        let key = match which {
            CombinedWhich::Top => key,
            CombinedWhich::Worst => key.reverse(),
        };
        key.then_with(|| (pairs[a].0, pairs[a].1).cmp(&(pairs[b].0, pairs[b].1)))
    });
    order.truncate(count);
    let tuples: Vec<Vec<usize>> = order.iter().map(|&p| vec![pairs[p].0, pairs[p].1]).collect();
    let scores: Vec<f64> = order.iter().map(|&p| rank_sum[p] as f64).collect();
    finish_result(
        tuples,
        scores,
        embed,
        DistanceMetric::Cosine,
        Some(cond),
        metric_cond,
    )
}

/// Extreme triples by pairwise-distance sum in cosine space; delegates to the
/// miner with a certified-exact merge pass.
pub fn select_triples(
    embed: &EmbeddingMatrix,
    direction: Direction,
    count: usize,
) -> Result<SelectionResult> {
    let (report, _) = mine_triples(
        embed,
        DistanceMetric::Cosine,
        Reducer::Sum,
        direction,
        count,
        Tiling::default(),
        true,
    )?;
    let tuples: Vec<Vec<usize>> = report.entries.iter().map(|e| e.indices.clone()).collect();
    let scores: Vec<f64> = report.entries.iter().map(|e| e.score).collect();
    finish_result(
        tuples,
        scores,
        embed,
        DistanceMetric::Cosine,
        None,
        DistanceMetric::Cosine,
    )
}

/// One generation task: a class tuple, a per-tuple sample counter, and a
/// deterministic seed for the generator.
#[derive(Debug, Clone, Serialize)]
pub struct ManifestRow {
    pub tuple: Vec<usize>,
    pub sample_index: usize,
    pub derived_seed: u64,
}

/// Expand a selection into generation tasks: `samples_per_pair` rows per
/// tuple, with seeds derived from (seed, tuple, sample index).
pub fn pairing_manifest(
    result: &SelectionResult,
    samples_per_pair: usize,
    seed: u64,
) -> Result<Vec<ManifestRow>> {
    if samples_per_pair == 0 {
        return Err(Error::InvalidArgument(
            "samples_per_pair must be at least 1".into(),
        ));
    }
    let mut rows = Vec::with_capacity(result.tuples.len() * samples_per_pair);
    for tuple in &result.tuples {
        let mut parts: Vec<u64> = tuple.iter().map(|&i| i as u64).collect();
        parts.push(0);
        for sample_index in 0..samples_per_pair {
            *parts.last_mut().expect("nonempty") = sample_index as u64;
            rows.push(ManifestRow {
                tuple: tuple.clone(),
                sample_index,
                derived_seed: derive_seed(seed, &parts),
            });
        }
    }
    Ok(rows)
}

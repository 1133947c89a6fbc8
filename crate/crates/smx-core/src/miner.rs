//! Exact extreme m-plet mining over an embedding set.
//!
//! Pairs are mined exactly by blocked upper-triangle reduction. Triples are
//! mined column-exactly: for every pair-column (i, j) the best completing
//! index k is found by a full scan, with the best M candidates per column fed
//! into a global top-K; an optional merge pass re-harvests frontier columns
//! to certify full exactness. Quads expand retained triples greedily.
//!
//! All scores are computed canonically (distances in sorted-index order) so
//! a given m-plet carries bit-identical scores no matter which tile, column,
//! or worker produced it; combined with lexicographic tie-breaking this makes
//! reports independent of the parallel schedule.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::distance::DistanceMetric;
use crate::error::{Error, Result};
use crate::matrix::{dot, row_normalize, EmbeddingMatrix};
use crate::seed::derive_seed;
use crate::topk::{BoundedTopK, ScoredSet};

/// Optimization direction for mined scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Min,
    Max,
}

impl std::str::FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Direction::Min),
            "max" => Ok(Direction::Max),
            other => Err(Error::InvalidArgument(format!(
                "unknown direction {other:?}, expected min or max"
            ))),
        }
    }
}

impl Direction {
    /// Is `a` strictly better than `b` in this direction?
    pub fn strictly_better(&self, a: f64, b: f64) -> bool {
        match self {
            Direction::Max => a > b,
            Direction::Min => a < b,
        }
    }
}

/// Permutation-invariant functional of the C(m,2) pairwise distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reducer {
    Sum,
    Mean,
    Std,
    Min,
    Max,
}

impl std::str::FromStr for Reducer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Reducer::Sum),
            "mean" => Ok(Reducer::Mean),
            "std" => Ok(Reducer::Std),
            "min" => Ok(Reducer::Min),
            "max" => Ok(Reducer::Max),
            other => Err(Error::InvalidArgument(format!(
                "unknown reducer {other:?}, expected sum, mean, std, min, or max"
            ))),
        }
    }
}

impl Reducer {
    /// Reduce distances listed in canonical order. Population std.
    fn apply(&self, distances: &[f64]) -> f64 {
        match self {
            Reducer::Sum => distances.iter().fold(0.0, |acc, d| acc + d),
            Reducer::Mean => {
                distances.iter().fold(0.0, |acc, d| acc + d) / distances.len() as f64
            }
            Reducer::Std => {
                let n = distances.len() as f64;
                let mean = distances.iter().fold(0.0, |acc, d| acc + d) / n;
                let var = distances
                    .iter()
                    .fold(0.0, |acc, d| acc + (d - mean) * (d - mean))
                    / n;
                var.sqrt()
            }
            Reducer::Min => distances.iter().fold(f64::INFINITY, |acc, d| acc.min(*d)),
            Reducer::Max => distances
                .iter()
                .fold(f64::NEG_INFINITY, |acc, d| acc.max(*d)),
        }
    }
}

/// Apply a reducer to exactly C(m,2) pairwise distances.
pub fn reduce_scores(distances: &[f64], reducer: Reducer) -> Result<f64> {
    let len = distances.len();
    let valid = (2usize..)
        .map(|m| m * (m - 1) / 2)
        .take_while(|&c| c <= len)
        .any(|c| c == len);
    if !valid {
        return Err(Error::InvalidArgument(format!(
            "distance list length {len} is not C(m,2) for any m >= 2"
        )));
    }
    Ok(reducer.apply(distances))
}

/// Exactness guarantee attached to a mined report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    ColumnExact,
    Greedy,
}

/// Tiling parameters a report was mined with.
#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize)]
pub struct Tiling {
    pub tile_i: usize,
    pub tile_j: usize,
    pub columns_per_batch: usize,
    pub candidates_per_column: usize,
}

impl Default for Tiling {
    fn default() -> Self {
        // working buffers stay O(n * columns_per_batch)
        Tiling {
            tile_i: 512,
            tile_j: 512,
            columns_per_batch: 4096,
            candidates_per_column: 1,
        }
    }
}

/// Ranked top-K list of extreme index sets.
#[derive(Debug, Clone, Serialize)]
pub struct MpletReport {
    pub m: usize,
    pub direction: Direction,
    pub metric: DistanceMetric,
    pub reducer: Reducer,
    pub top_k: usize,
    pub exactness: Exactness,
    pub tiling: Tiling,
    pub entries: Vec<ScoredSet>,
}

impl MpletReport {
    /// Score of the worst retained entry (the K-th threshold).
    pub fn threshold(&self) -> Option<f64> {
        self.entries.last().map(|e| e.score)
    }
}

/// Wall-clock statistics of a mining run. Not part of the deterministic
/// payload.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MinerStats {
    pub columns: u64,
    pub evaluations: u64,
    pub merged_columns: u64,
    pub elapsed_secs: f64,
    pub evals_per_sec: f64,
}

/// Precomputed scoring context shared by the miner and the verifier.
pub struct ScoringContext {
    rows: EmbeddingMatrix,
    norms_sq: Vec<f64>,
    metric: DistanceMetric,
}

impl ScoringContext {
    pub fn new(e: &EmbeddingMatrix, metric: DistanceMetric) -> Result<Self> {
        let rows = match metric {
            // pre-normalized rows let inner-product panels double as
            // similarity panels
            DistanceMetric::Cosine => row_normalize(e)?,
            _ => e.clone(),
        };
        let norms_sq = (0..rows.n_rows())
            .map(|i| dot(rows.row(i), rows.row(i)))
            .collect();
        Ok(ScoringContext {
            rows,
            norms_sq,
            metric,
        })
    }

    pub fn n(&self) -> usize {
        self.rows.n_rows()
    }

    #[inline]
    fn distance_from_dot(&self, a: usize, b: usize, ip: f64) -> f64 {
        match self.metric {
            DistanceMetric::Cosine => 1.0 - ip,
            DistanceMetric::Euclidean => {
                (self.norms_sq[a] + self.norms_sq[b] - 2.0 * ip).max(0.0).sqrt()
            }
            DistanceMetric::SquaredEuclidean => {
                (self.norms_sq[a] + self.norms_sq[b] - 2.0 * ip).max(0.0)
            }
        }
    }

    /// Canonical pairwise distance via the Gram identity.
    #[inline]
    pub fn pair_distance(&self, a: usize, b: usize) -> f64 {
        self.distance_from_dot(a, b, dot(self.rows.row(a), self.rows.row(b)))
    }

    /// Canonical score of a sorted index set: distances enumerated in
    /// lexicographic pair order, then reduced.
    pub fn score_set(&self, sorted_indices: &[usize], reducer: Reducer) -> f64 {
        let m = sorted_indices.len();
        let mut distances = Vec::with_capacity(m * (m - 1) / 2);
        for a in 0..m {
            for b in (a + 1)..m {
                distances.push(self.pair_distance(sorted_indices[a], sorted_indices[b]));
            }
        }
        reducer.apply(&distances)
    }
}

fn check_top_k(top_k: usize, max: usize) -> Result<()> {
    if top_k == 0 || top_k > max {
        return Err(Error::TopKOutOfRange { top_k, max });
    }
    Ok(())
}

fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

fn triple_count(n: usize) -> usize {
    n * (n - 1) * (n - 2) / 6
}

/// Exact global top-K over all pairs i < j.
pub fn mine_pairs(
    e: &EmbeddingMatrix,
    metric: DistanceMetric,
    direction: Direction,
    top_k: usize,
    block: usize,
) -> Result<(MpletReport, MinerStats)> {
    let n = e.n_rows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "pair mining needs at least 2 rows, got {n}"
        )));
    }
    check_top_k(top_k, pair_count(n))?;
    if block == 0 {
        return Err(Error::InvalidTiling("block size must be at least 1".into()));
    }
    let start = Instant::now();
    let ctx = ScoringContext::new(e, metric)?;

    let mut blocks = Vec::new();
    for bi in (0..n).step_by(block) {
        for bj in (bi..n).step_by(block) {
            blocks.push((bi, bj));
        }
    }

    let collector = blocks
        .par_iter()
        .fold(
            || (BoundedTopK::new(top_k, direction), 0u64),
            |(mut tk, mut evals), &(bi, bj)| {
                let i_end = (bi + block).min(n);
                let j_end = (bj + block).min(n);
                for i in bi..i_end {
                    let j_start = bj.max(i + 1);
                    for j in j_start..j_end {
                        let d = ctx.pair_distance(i, j);
                        tk.offer(&[i, j], d);
                        evals += 1;
                    }
                }
                (tk, evals)
            },
        )
        .reduce(
            || (BoundedTopK::new(top_k, direction), 0u64),
            |(mut a, ea), (b, eb)| {
                a.merge(b);
                (a, ea + eb)
            },
        );
    let (collector, evaluations) = collector;
    let elapsed = start.elapsed().as_secs_f64();
    let stats = MinerStats {
        columns: evaluations,
        evaluations,
        merged_columns: 0,
        elapsed_secs: elapsed,
        evals_per_sec: evaluations as f64 / elapsed.max(1e-9),
    };
    Ok((
        MpletReport {
            m: 2,
            direction,
            metric,
            // for pairs the score is the single distance, i.e. the mean
            reducer: Reducer::Mean,
            top_k,
            exactness: Exactness::Exact,
            tiling: Tiling {
                tile_i: block,
                tile_j: block,
                columns_per_batch: block,
                candidates_per_column: 1,
            },
            entries: collector.into_sorted(),
        },
        stats,
    ))
}

/// Per-column best-M candidates kept during the k-scan.
struct ColumnBest {
    m: usize,
    direction: Direction,
    // (score, k), best first
    slots: Vec<(f64, usize)>,
}

impl ColumnBest {
    fn new(m: usize, direction: Direction) -> Self {
        ColumnBest {
            m,
            direction,
            slots: Vec::with_capacity(m),
        }
    }

    #[inline]
    fn offer(&mut self, score: f64, k: usize) {
        if self.slots.len() == self.m {
            let worst = self.slots[self.m - 1];
            // ties prefer the smaller k, which maps to the lexicographically
            // smaller sorted triple
            if !(self.direction.strictly_better(score, worst.0)
                || (score == worst.0 && k < worst.1))
            {
                return;
            }
            self.slots.pop();
        }
        let pos = self
            .slots
            .partition_point(|&(s, kk)| {
                self.direction.strictly_better(s, score) || (s == score && kk < k)
            });
        self.slots.insert(pos, (score, k));
    }

    /// Worst retained score, with whether the column was fully retained.
    fn worst(&self) -> Option<f64> {
        self.slots.last().map(|&(s, _)| s)
    }
}

struct TriplePanels {
    /// inner products of every tile row against every k, row-major
    /// (tile row index, then k)
    a: Vec<f64>,
    b: Vec<f64>,
}

fn build_panel(ctx: &ScoringContext, tile: std::ops::Range<usize>) -> Vec<f64> {
    let n = ctx.n();
    let mut panel = vec![0.0; tile.len() * n];
    panel
        .par_chunks_mut(n)
        .zip(tile.clone().into_par_iter())
        .for_each(|(row_out, i)| {
            let ri = ctx.rows.row(i);
            for (k, out) in row_out.iter_mut().enumerate() {
                *out = dot(ri, ctx.rows.row(k));
            }
        });
    panel
}

#[allow(clippy::too_many_arguments)]
fn scan_column(
    ctx: &ScoringContext,
    reducer: Reducer,
    direction: Direction,
    i: usize,
    j: usize,
    d_ij: f64,
    row_a: &[f64],
    row_b: &[f64],
    per_column: usize,
) -> ColumnBest {
    let n = ctx.n();
    let mut best = ColumnBest::new(per_column, direction);
    for k in 0..n {
        if k == i || k == j {
            continue;
        }
        let d_ik = ctx.distance_from_dot(i, k, row_a[k]);
        let d_jk = ctx.distance_from_dot(j, k, row_b[k]);
        let score = fast_triple_score(reducer, d_ij, d_ik, d_jk);
        best.offer(score, k);
    }
    best
}

/// Triple score in column role order; used only for intra-column comparison.
#[inline]
fn fast_triple_score(reducer: Reducer, d_ij: f64, d_ik: f64, d_jk: f64) -> f64 {
    match reducer {
        Reducer::Sum => d_ij + d_ik + d_jk,
        Reducer::Mean => (d_ij + d_ik + d_jk) / 3.0,
        Reducer::Std => {
            let mean = (d_ij + d_ik + d_jk) / 3.0;
            let var = ((d_ij - mean) * (d_ij - mean)
                + (d_ik - mean) * (d_ik - mean)
                + (d_jk - mean) * (d_jk - mean))
                / 3.0;
            var.sqrt()
        }
        Reducer::Min => d_ij.min(d_ik).min(d_jk),
        Reducer::Max => d_ij.max(d_ik).max(d_jk),
    }
}

#[inline]
fn sorted3(i: usize, j: usize, k: usize) -> [usize; 3] {
    let mut t = [i, j, k];
    t.sort_unstable();
    t
}

/// Column-exact top-K triple mining with optional exactness certification.
///
/// `exact_merge` re-harvests every column whose retained frontier touches the
/// global K-th threshold, upgrading the result from column-exact to exact.
#[allow(clippy::too_many_arguments)]
pub fn mine_triples(
    e: &EmbeddingMatrix,
    metric: DistanceMetric,
    reducer: Reducer,
    direction: Direction,
    top_k: usize,
    tiling: Tiling,
    exact_merge: bool,
) -> Result<(MpletReport, MinerStats)> {
    let n = e.n_rows();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "triple mining needs at least 3 rows, got {n}"
        )));
    }
    check_top_k(top_k, triple_count(n))?;
    if tiling.tile_i == 0 || tiling.tile_j == 0 || tiling.columns_per_batch == 0 {
        return Err(Error::InvalidTiling(
            "tile_i, tile_j, and columns_per_batch must be at least 1".into(),
        ));
    }
    if tiling.candidates_per_column == 0 {
        return Err(Error::InvalidTiling(
            "candidates_per_column must be at least 1".into(),
        ));
    }
    let start = Instant::now();
    let ctx = ScoringContext::new(e, metric)?;
    let per_column = tiling.candidates_per_column;

    let mut global = BoundedTopK::new(top_k, direction);
    let mut columns_total = 0u64;
    let mut evaluations = 0u64;
    // columns whose worst retained candidate may hide further frontier
    // candidates; only consulted by the merge pass
    let mut frontier_watch: Vec<(usize, usize, f64, bool)> = Vec::new();

    for ti in (0..n).step_by(tiling.tile_i) {
        let i_range = ti..(ti + tiling.tile_i).min(n);
        for tj in (0..n).step_by(tiling.tile_j) {
            let j_range = tj..(tj + tiling.tile_j).min(n);
            if j_range.end <= i_range.start + 1 {
                continue;
            }
            let panels = TriplePanels {
                a: build_panel(&ctx, i_range.clone()),
                b: build_panel(&ctx, j_range.clone()),
            };
            let columns: Vec<(usize, usize)> = i_range
                .clone()
                .flat_map(|i| {
                    let lo = j_range.start.max(i + 1);
                    (lo..j_range.end).map(move |j| (i, j))
                })
                .collect();
            columns_total += columns.len() as u64;
            evaluations += columns.len() as u64 * (n as u64 - 2);

            let (tile_tk, tile_watch) = columns
                .par_chunks(tiling.columns_per_batch)
                .fold(
                    || (BoundedTopK::new(top_k, direction), Vec::new()),
                    |(mut tk, mut watch), chunk| {
                        for &(i, j) in chunk {
                            let row_a = &panels.a
                                [(i - i_range.start) * n..(i - i_range.start + 1) * n];
                            let row_b = &panels.b
                                [(j - j_range.start) * n..(j - j_range.start + 1) * n];
                            let d_ij = ctx.distance_from_dot(i, j, row_a[j]);
                            let best = scan_column(
                                &ctx, reducer, direction, i, j, d_ij, row_a, row_b, per_column,
                            );
                            let truncated = best.slots.len() == per_column
                                && per_column < n - 2;
                            if exact_merge {
                                if let Some(worst) = best.worst() {
                                    watch.push((i, j, worst, truncated));
                                }
                            }
                            for &(_, k) in &best.slots {
                                let t = sorted3(i, j, k);
                                tk.offer(&t, ctx.score_set(&t, reducer));
                            }
                        }
                        (tk, watch)
                    },
                )
                .reduce(
                    || (BoundedTopK::new(top_k, direction), Vec::new()),
                    |(mut a, mut wa), (b, wb)| {
                        a.merge(b);
                        wa.extend(wb);
                        (a, wa)
                    },
                );
            global.merge(tile_tk);
            frontier_watch.extend(tile_watch);
        }
    }

    let mut merged_columns = 0u64;
    let mut exactness = Exactness::ColumnExact;
    if exact_merge {
        let threshold = global.threshold();
        // Per-column selection compares scores in column role order while the
        // final ranking uses canonical (sorted-index) order; the two agree to
        // a few ulps. Widen the frontier test accordingly so roundoff can
        // never hide a candidate from the certification pass.
        let suspect = |worst: f64| match threshold {
            Some(t) => {
                let guard = 1e-12 * (1.0 + t.abs());
                match direction {
                    Direction::Max => worst >= t - guard,
                    Direction::Min => worst <= t + guard,
                }
            }
            // top-K not yet full: every unseen candidate matters
            None => true,
        };
        let suspects: Vec<(usize, usize)> = frontier_watch
            .iter()
            .filter(|&&(_, _, worst, truncated)| truncated && suspect(worst))
            .map(|&(i, j, _, _)| (i, j))
            .collect();
        merged_columns = suspects.len() as u64;
        evaluations += suspects.len() as u64 * (n as u64 - 2);

        let extra = suspects
            .par_iter()
            .fold(
                || BoundedTopK::new(top_k, direction),
                |mut tk, &(i, j)| {
                    for k in 0..n {
                        if k == i || k == j {
                            continue;
                        }
                        let t = sorted3(i, j, k);
                        tk.offer(&t, ctx.score_set(&t, reducer));
                    }
                    tk
                },
            )
            .reduce(
                || BoundedTopK::new(top_k, direction),
                |mut a, b| {
                    a.merge(b);
                    a
                },
            );
        global.merge(extra);
        exactness = Exactness::Exact;
    }

    let elapsed = start.elapsed().as_secs_f64();
    let stats = MinerStats {
        columns: columns_total,
        evaluations,
        merged_columns,
        elapsed_secs: elapsed,
        evals_per_sec: evaluations as f64 / elapsed.max(1e-9),
    };
    Ok((
        MpletReport {
            m: 3,
            direction,
            metric,
            reducer,
            top_k,
            exactness,
            tiling,
            entries: global.into_sorted(),
        },
        stats,
    ))
}

/// Expand each retained triple to its best quad: exact per triple, globally
/// greedy. Identical quads arising from different triples are deduplicated.
pub fn expand_quads(
    triples: &MpletReport,
    e: &EmbeddingMatrix,
    metric: DistanceMetric,
    reducer: Reducer,
    direction: Direction,
) -> Result<(MpletReport, MinerStats)> {
    if triples.m != 3 {
        return Err(Error::InvalidArgument(format!(
            "quad expansion needs a triple report, got m = {}",
            triples.m
        )));
    }
    let n = e.n_rows();
    if n < 4 {
        return Err(Error::InvalidArgument(format!(
            "quad expansion needs at least 4 rows, got {n}"
        )));
    }
    let start = Instant::now();
    let ctx = ScoringContext::new(e, metric)?;

    let winners: Vec<([usize; 4], f64)> = triples
        .entries
        .par_iter()
        .map(|entry| {
            let t = &entry.indices;
            let mut best: Option<([usize; 4], f64)> = None;
            for l in 0..n {
                if t.contains(&l) {
                    continue;
                }
                let mut q = [t[0], t[1], t[2], l];
                q.sort_unstable();
                let score = ctx.score_set(&q, reducer);
                let better = match &best {
                    None => true,
                    Some((bq, bs)) => {
                        direction.strictly_better(score, *bs) || (score == *bs && q < *bq)
                    }
                };
                if better {
                    best = Some((q, score));
                }
            }
            best.expect("n >= 4 guarantees a candidate")
        })
        .collect();

    let mut collector = BoundedTopK::new(winners.len().max(1), direction);
    for (q, s) in &winners {
        collector.offer(q, *s);
    }
    let entries = collector.into_sorted();
    let elapsed = start.elapsed().as_secs_f64();
    let evaluations = triples.entries.len() as u64 * (n as u64 - 3);
    let stats = MinerStats {
        columns: triples.entries.len() as u64,
        evaluations,
        merged_columns: 0,
        elapsed_secs: elapsed,
        evals_per_sec: evaluations as f64 / elapsed.max(1e-9),
    };
    Ok((
        MpletReport {
            m: 4,
            direction,
            metric,
            reducer,
            top_k: entries.len(),
            exactness: Exactness::Greedy,
            tiling: triples.tiling,
            entries,
        },
        stats,
    ))
}

/// Outcome of a stochastic consistency check against a mined report.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub samples: usize,
    pub top1_violations: usize,
    pub exceedances_total: usize,
    pub exceedances_known: usize,
    pub exceedances_new: usize,
    pub worst_exceedance_margin: f64,
}

/// Draw random m-plets, score them with the report's metric and reducer, and
/// count strict top-1 violations and exceedances above the K-th threshold.
pub fn verify_stochastic(
    e: &EmbeddingMatrix,
    report: &MpletReport,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    if report.entries.is_empty() {
        return Err(Error::InvalidArgument("report has no entries".into()));
    }
    let n = e.n_rows();
    if n < report.m {
        return Err(Error::InvalidArgument(format!(
            "report m = {} exceeds row count {n}",
            report.m
        )));
    }
    let ctx = ScoringContext::new(e, report.metric)?;
    let direction = report.direction;
    let rank1 = report.entries[0].score;
    let threshold = report.threshold().expect("non-empty entries");
    let known: std::collections::HashSet<&[usize]> = report
        .entries
        .iter()
        .map(|entry| entry.indices.as_slice())
        .collect();

    struct Acc {
        top1: usize,
        total: usize,
        known: usize,
        new: usize,
        worst: f64,
    }

    let acc = (0..samples)
        .into_par_iter()
        .fold(
            || Acc {
                top1: 0,
                total: 0,
                known: 0,
                new: 0,
                worst: 0.0,
            },
            |mut acc, sample_idx| {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(
                    seed,
                    &[sample_idx as u64],
                ));
                let mut indices =
                    rand::seq::index::sample(&mut rng, n, report.m).into_vec();
                indices.sort_unstable();
                let score = ctx.score_set(&indices, report.reducer);
                if direction.strictly_better(score, rank1) {
                    acc.top1 += 1;
                }
                if direction.strictly_better(score, threshold) {
                    acc.total += 1;
                    if known.contains(indices.as_slice()) {
                        acc.known += 1;
                    } else {
                        acc.new += 1;
                    }
                    acc.worst = acc.worst.max((score - threshold).abs());
                }
                acc
            },
        )
        .reduce(
            || Acc {
                top1: 0,
                total: 0,
                known: 0,
                new: 0,
                worst: 0.0,
            },
            |a, b| Acc {
                top1: a.top1 + b.top1,
                total: a.total + b.total,
                known: a.known + b.known,
                new: a.new + b.new,
                worst: a.worst.max(b.worst),
            },
        );

    Ok(VerificationReport {
        samples,
        top1_violations: acc.top1,
        exceedances_total: acc.total,
        exceedances_known: acc.known,
        exceedances_new: acc.new,
        worst_exceedance_margin: acc.worst,
    })
}

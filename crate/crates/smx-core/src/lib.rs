//! Geometric and algorithmic core for score-mixing diffusion analysis:
//! convex mixing of class-conditional Gaussian-mixture scores under a
//! deterministic second-order sampler, embedding/condition alignment metrics
//! (CKA, soft nearest-neighbor alignment, distance correlation), triplet
//! order-preservation probabilities with Monte-Carlo validation, exact
//! extreme m-plet mining with a stochastic verifier, class-selection
//! strategies, and generator-evaluation metrics.

pub mod align;
pub mod distance;
pub mod error;
pub mod gram;
pub mod losses;
pub mod matrix;
pub mod miner;
pub mod sampler;
pub mod seed;
pub mod select;
pub mod theorem;
pub mod topk;

pub use align::{
    cknna, correlation_stats, distance_correlation_lists, linear_cka, linear_cka_feature,
    random_baseline, AlignmentMetric, AlignmentScore, CorrelationStats, DistancePairLists,
};
pub use distance::{distance, pairwise_distance_block, DistanceMetric};
pub use error::{Error, Result};
pub use gram::{centered_normalized_gram, cosine_gram, NormalizedGram};
pub use losses::{
    alignment_loss, edm2_weight, eval_metrics, ramp_weight, snr_weight, total_loss_combine,
    ClassFeatureSet, ClassMetrics, EvalMetrics, LossWeights,
};
pub use matrix::{
    class_centers, load_embeddings, load_labels, row_normalize, save_embeddings, EmbeddingMatrix,
    FileFormat, SMX1_MAGIC, SMX1_VERSION,
};
pub use miner::{
    expand_quads, mine_pairs, mine_triples, reduce_scores, verify_stochastic, Direction,
    Exactness, MinerStats, MpletReport, Reducer, ScoringContext, Tiling, VerificationReport,
};
pub use sampler::{
    analytic_score, grid_sweep, guided_score, heun_sample, heun_trajectory, karras_schedule,
    log_density, mixed_score, GaussianClass, GaussianComponent, MixSpec, NoiseSchedule,
    SampleBatch, ScheduleSummary,
};
pub use seed::derive_seed;
pub use select::{
    pairing_manifest, select_combined, select_pairs, select_triples, CombinedWhich, ManifestRow,
    SelectionResult, SelectionSpec, SelectionStrategy,
};
pub use theorem::{
    centered_margin, exact_preservation_probability, gram_topk_distant_pairs, pair_overlap,
    preservation_report, random_positive_margin_triplets, residual_norm, sample_misaligned_gram,
    simulate_misalignment, std_normal_cdf, topk_overlap_analysis, universal_lower_bound,
    MaskEntries, MaskKind, MisalignmentModel, OverlapReport, PreservationReport, SimulationReport,
    SparseMask, TripletMask,
};
pub use topk::{BoundedTopK, ScoredSet};

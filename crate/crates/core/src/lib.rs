//! Functional-connectivity classification pipeline.
//!
//! The crate covers the full path from regional time series to interpretable
//! feature rankings:
//!
//! 1. [`connectivity`] — covariance estimation and tangent-space embedding of
//!    SPD matrices into Euclidean feature vectors.
//! 2. [`synthgen`] — synthetic cohorts with planted group differences, the
//!    ground truth against which the rest of the pipeline is verified.
//! 3. [`model`] — a dense feed-forward binary classifier trained with Adam,
//!    dropout, and early stopping on validation AUROC.
//! 4. [`evaluation`] — stratified splits, k-fold cross-validation, AUROC.
//! 5. [`search`] — randomized architecture search plus quantile-conditioned
//!    kernel density analysis of the trial results.
//! 6. [`importance`] — permutation feature importance, z-score ranking, and
//!    Brodmann-area labeling of the top connectivity features.
//! 7. [`io`] — the on-disk formats shared by the CLI and external tools.

pub mod connectivity;
pub mod error;
pub mod evaluation;
pub mod importance;
pub mod io;
pub mod model;
pub mod search;
pub mod seeds;
pub mod synthgen;

pub use connectivity::{
    build_dataset, estimate_covariance, reference_mean, region_pairs, spd_eig, spd_expm,
    spd_invsqrt, spd_logm, spd_sqrt, tangent_embed, unvectorize, CovMatrix, DatasetBuild,
    EmbedOptions, FeatureVector, MeanMode, ReferenceMean, TimeSeriesMatrix,
};
pub use error::{Error, Result};
pub use evaluation::{auroc, kfold, kfold_indices, split_indices, split_train_test, Dataset};
pub use importance::{
    annotate_brodmann, cross_granularity_overlap, map_to_brodmann, pfi, threshold_edges,
    zscore_rank, zscores, BrodmannArea, BrodmannTable, Edge, ImportanceRecord, OverlapReport,
};
pub use model::{init_model, loss_and_gradients, train, EpochStats, ModelConfig, TrainedModel};
pub use search::{
    analyze_trials, kde2d, kde_peak, range_adequacy, run_search, sample_config, select_quantiles,
    AdequacyReport, GridSpec, Kde2d, KdeResult, SearchSpace, TrainingDefaults, TrialRecord,
};
pub use synthgen::{
    generate_cohort, group_covariances, make_atlas, Atlas, FunctionalLabel, PlantedEffect, Region,
};

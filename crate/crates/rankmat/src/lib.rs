//! Matrix-factorization recommenders with popularity-aware regression
//! targets, plus the instrumentation to compare them.
//!
//! Three model kinds share one SGD trainer and differ only in what a factor
//! pair's dot product is regressed against: the raw rating (vanilla), the
//! log-transformed rating (glovemat), or the log rating normalized by the
//! user's and item's log popularity ranks (rankmat). The crate evaluates
//! each on held-out MAE and on how steeply top-N recommendation frequency
//! decays across items — a popularity-bias measure — and sweeps all three
//! across a learning-rate grid in one deterministic run.
//!
//! Typical flow: [`dataset::load_ratings`] → [`RatingDataset::split`] →
//! [`ranking::compute_ranks`] on the train half → [`trainer::train`] or
//! [`trainer::grid_search`] → [`metrics::evaluate`]; or drive all of it at
//! once with [`experiments::run_comparison`].

pub mod dataset;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod models;
pub mod ranking;
mod seeding;
pub mod synth;
pub mod trainer;

pub use dataset::{load_ratings, RatingDataset, RatingsFormat, SplitPair, Triplet};
pub use error::{Error, Result};
pub use experiments::{
    emit_plot_data, run_comparison, CompareOptions, ComparisonRow, ComparisonTable,
    DatasetFingerprint,
};
pub use metrics::{
    degree_of_matthew_effect, evaluate, log_log_slope, mae, top_n_recommend, zipf_slope,
    FreqDistribution, MetricReport,
};
pub use models::{
    grad_pair, grad_pair_into, loss, predict_rating, target, ClampRange, EmbeddingModel,
    FactorMatrix, ModelKind,
};
pub use ranking::{compute_ranks, RankBasis, RankTable};
pub use synth::SynthConfig;
pub use trainer::{
    default_learning_rate_grid, grid_search, init_embeddings, train, GridPoint, TrainConfig,
    TrainTrace, DIVERGENCE_LOSS_CAP,
};

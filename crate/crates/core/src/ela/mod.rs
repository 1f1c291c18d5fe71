//! Landscape analysis: numeric summaries of how an objective behaves over a
//! sampled design, and distances between those summaries.
//!
//! The pipeline is: sample a design once ([`sample::sample_design`]), carve
//! it into overlapping subsamples, compute a fixed catalog of features per
//! subsample ([`features::compute_features`]), and treat each feature's
//! values across subsamples as a small empirical distribution
//! ([`distribution::FeatureDistribution`]). Two landscapes are compared by
//! the mean per-feature Wasserstein distance after pooled standardization
//! ([`wasserstein::landscape_distance`]).

pub mod distribution;
pub mod features;
pub mod sample;
pub mod wasserstein;

pub use distribution::{
    feature_distribution, prune_correlated, DistributionParams, FeatureDistribution,
};
pub use features::{compute_features, FeatureInput, FeatureOptions, FEATURE_NAMES};
pub use sample::{latin_hypercube, sample_design, DesignSample, PairwiseDistances};
pub use wasserstein::{landscape_distance, wasserstein_1d};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ElaError {
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("design has {x} points but {y} objective values")]
    LengthMismatch { x: usize, y: usize },
    #[error("unknown feature '{0}'")]
    UnknownFeature(String),
    #[error("distributions disagree on retained features ({left} vs {right})")]
    FeatureMismatch { left: String, right: String },
    #[error("no features retained")]
    EmptyRetention,
    #[error(transparent)]
    Core(#[from] crate::problem::CoreError),
}

/// Group prefix of a feature name (`"disp.ratio_mean_q02"` -> `"disp"`).
pub fn feature_group(name: &str) -> &str {
    name.split('.').next().unwrap_or(name)
}

//! Feature distributions: each feature's values across overlapping
//! subsamples of one design, plus correlation pruning across landscapes.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::features::{compute_features, FeatureInput, FeatureOptions, FEATURE_NAMES};
use super::sample::{DesignSample, PairwiseDistances};
use super::ElaError;
use crate::rng::labeled_stream;

/// How the subsamples are drawn.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DistributionParams {
    /// Number of subsamples.
    pub n_subsamples: usize,
    /// Fraction of the design in each subsample (without replacement).
    pub rate: f64,
}

impl Default for DistributionParams {
    fn default() -> Self {
        DistributionParams { n_subsamples: 5, rate: 0.8 }
    }
}

/// Per-feature value distributions for one landscape. Values are always
/// finite: non-finite estimates are imputed at build time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDistribution {
    /// Feature name -> one value per subsample, in subsample order.
    pub features: IndexMap<String, Vec<f64>>,
    /// Features that survived pruning, in catalog order. Starts as every
    /// computed feature.
    pub retained: Vec<String>,
    /// Subsamples per distribution.
    pub n_ela: usize,
    /// Subsample fraction.
    pub rate_ela: f64,
    /// Seed that drew the subsample indices.
    pub sampler_seed: u64,
}

impl FeatureDistribution {
    /// Restricts the retained list to `names` (intersection, catalog order
    /// preserved).
    pub fn retain(&mut self, names: &[String]) {
        self.retained.retain(|f| names.contains(f));
    }

    /// Values for one retained feature.
    pub fn values(&self, name: &str) -> Option<&[f64]> {
        self.features.get(name).map(Vec::as_slice)
    }
}

/// Replaces non-finite values by the worst finite magnitude of the same
/// feature within this distribution, or zero when nothing is finite. This
/// keeps distributions serializable and distances defined while still
/// penalizing degenerate estimates.
fn impute(values: &mut [f64]) {
    let worst =
        values.iter().copied().filter(|v| v.is_finite()).map(f64::abs).fold(0.0, f64::max);
    for v in values {
        if !v.is_finite() {
            *v = worst;
        }
    }
}

/// Builds the feature distribution of a design: `n_subsamples` subsamples at
/// `rate`, features per subsample, imputation per feature. Subsample draws
/// come from `sampler_seed` alone, so a distribution is reproducible from
/// the design plus this one number. `wanted` limits computation to the named
/// features (after a pruning pass decided what is worth keeping).
pub fn feature_distribution(
    design: &DesignSample,
    distances: Option<&PairwiseDistances>,
    opts: &FeatureOptions,
    params: &DistributionParams,
    wanted: Option<&[String]>,
    sampler_seed: u64,
) -> Result<FeatureDistribution, ElaError> {
    let n = design.len();
    let m = (params.rate * n as f64).round() as usize;
    if params.n_subsamples == 0 {
        return Err(ElaError::DegenerateSample("zero subsamples".into()));
    }
    if m < 4 || m > n {
        return Err(ElaError::DegenerateSample(format!(
            "subsample of {m} from {n} points",
            m = m,
            n = n
        )));
    }
    if let Some(d) = distances {
        if d.len() != n {
            return Err(ElaError::LengthMismatch { x: n, y: d.len() });
        }
    }

    let mut rng = labeled_stream(sampler_seed, "ela-subsample", 0);
    let mut per_feature: IndexMap<String, Vec<f64>> = IndexMap::new();
    for _ in 0..params.n_subsamples {
        let mut indices = rand::seq::index::sample(&mut rng, n, m).into_vec();
        indices.sort_unstable();
        let (sx, sy) = design.subset(&indices);
        let input = FeatureInput {
            x: &sx,
            y: &sy,
            precomputed: distances.map(|d| (d, indices.as_slice())),
        };
        let values = compute_features(&input, opts, wanted)?;
        for (name, value) in values {
            per_feature.entry(name).or_default().push(value);
        }
    }
    for values in per_feature.values_mut() {
        impute(values);
    }
    let retained: Vec<String> = per_feature.keys().cloned().collect();
    Ok(FeatureDistribution {
        features: per_feature,
        retained,
        n_ela: params.n_subsamples,
        rate_ela: params.rate,
        sampler_seed,
    })
}

/// Greedy forward correlation pruning over one or more landscapes. Features
/// are visited in catalog order; a candidate is dropped when its value
/// vector (concatenated across all given distributions) correlates with an
/// already-kept feature beyond `threshold` in absolute value. Undefined
/// correlations (zero variance) count as zero, so degenerate features are
/// kept rather than silently removed.
pub fn prune_correlated(
    distributions: &[&FeatureDistribution],
    threshold: f64,
) -> Result<Vec<String>, ElaError> {
    if distributions.is_empty() {
        return Err(ElaError::DegenerateSample("no distributions to prune".into()));
    }
    let candidates: Vec<String> = FEATURE_NAMES
        .iter()
        .filter(|name| distributions.iter().all(|d| d.features.contains_key(**name)))
        .map(|s| s.to_string())
        .collect();
    if candidates.is_empty() {
        return Err(ElaError::EmptyRetention);
    }

    let concat = |name: &str| -> Vec<f64> {
        distributions
            .iter()
            .flat_map(|d| d.features[name].iter().copied())
            .collect()
    };

    let mut kept: Vec<String> = Vec::new();
    for name in candidates {
        let values = concat(&name);
        let redundant = kept.iter().any(|k| {
            let c = correlation(&values, &concat(k));
            let c = if c.is_finite() { c } else { 0.0 };
            c.abs() > threshold
        });
        if !redundant {
            kept.push(name);
        }
    }
    Ok(kept)
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    num / (da * db).sqrt()
}

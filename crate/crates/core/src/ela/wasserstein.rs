//! Earth-mover distance between one-dimensional samples, and the pooled
//! landscape distance built on it.

use super::distribution::FeatureDistribution;
use super::ElaError;

/// 1-Wasserstein distance between two empirical distributions: the integral
/// of |F_a - F_b| over the merged support. Handles unequal sample sizes; for
/// equal sizes this reduces to the mean absolute difference of the sorted
/// samples.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64, ElaError> {
    if a.is_empty() || b.is_empty() {
        return Err(ElaError::DegenerateSample("empty sample in distance".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);

    let na = sa.len() as f64;
    let nb = sb.len() as f64;
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut prev = sa[0].min(sb[0]);
    let mut total = 0.0;
    while ia < sa.len() || ib < sb.len() {
        let next = match (sa.get(ia), sb.get(ib)) {
            (Some(&va), Some(&vb)) => va.min(vb),
            (Some(&va), None) => va,
            (None, Some(&vb)) => vb,
            (None, None) => break,
        };
        let cdf_a = ia as f64 / na;
        let cdf_b = ib as f64 / nb;
        total += (cdf_a - cdf_b).abs() * (next - prev);
        prev = next;
        while ia < sa.len() && sa[ia] == next {
            ia += 1;
        }
        while ib < sb.len() && sb[ib] == next {
            ib += 1;
        }
    }
    Ok(total)
}

const POOLED_SD_FLOOR: f64 = 1e-12;

/// Mean per-feature Wasserstein distance between two landscapes. Each
/// feature is standardized by the mean and standard deviation pooled over
/// both distributions (a near-zero pooled spread standardizes by 1), so no
/// single feature's scale dominates. Both sides must retain the same
/// features.
pub fn landscape_distance(
    a: &FeatureDistribution,
    b: &FeatureDistribution,
) -> Result<f64, ElaError> {
    if a.retained != b.retained {
        return Err(ElaError::FeatureMismatch {
            left: a.retained.join(","),
            right: b.retained.join(","),
        });
    }
    if a.retained.is_empty() {
        return Err(ElaError::EmptyRetention);
    }
    let mut sum = 0.0;
    for name in &a.retained {
        let va = a
            .features
            .get(name)
            .ok_or_else(|| ElaError::UnknownFeature(name.clone()))?;
        let vb = b
            .features
            .get(name)
            .ok_or_else(|| ElaError::UnknownFeature(name.clone()))?;
        let pooled: Vec<f64> = va.iter().chain(vb).copied().collect();
        let n = pooled.len() as f64;
        let mean = pooled.iter().sum::<f64>() / n;
        let var = pooled.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        let scale = if sd < POOLED_SD_FLOOR { 1.0 } else { sd };
        let za: Vec<f64> = va.iter().map(|v| (v - mean) / scale).collect();
        let zb: Vec<f64> = vb.iter().map(|v| (v - mean) / scale).collect();
        sum += wasserstein_1d(&za, &zb)?;
    }
    Ok(sum / a.retained.len() as f64)
}

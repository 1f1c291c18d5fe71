//! Budget-normalized performance scores.

use crate::problem::CoreError;

/// Default clip range for the convergence score: objective gaps below
/// `1e-8` count as solved, gaps above `1e2` as unsolved.
pub const DEFAULT_CLIP: (f64, f64) = (1e-8, 1e2);

/// Area over the clipped log-convergence curve, in `[0, 1]`, higher is
/// better.
///
/// Each trace entry is clipped into `[clip_lo, clip_hi]`, mapped to
/// `(log10(y) - log10(clip_lo)) / (log10(clip_hi) - log10(clip_lo))`, and the
/// complement is averaged over exactly `budget` steps. Traces shorter than
/// the budget are padded with their final value, so early stopping is neither
/// rewarded nor punished.
///
/// `trace_best` must hold best-so-far values; pass objective gaps
/// (`best - known_optimum`) when the optimum is known.
pub fn aocc(trace_best: &[f64], budget: u64, clip_lo: f64, clip_hi: f64) -> Result<f64, CoreError> {
    if !(clip_lo > 0.0 && clip_lo < clip_hi && clip_hi.is_finite()) {
        return Err(CoreError::InvalidClipRange { lo: clip_lo, hi: clip_hi });
    }
    if budget == 0 {
        return Err(CoreError::ZeroBudget);
    }
    if trace_best.is_empty() || trace_best.iter().any(|v| v.is_nan()) {
        return Err(CoreError::InvalidTrace);
    }
    let lo_log = clip_lo.log10();
    let span = clip_hi.log10() - lo_log;
    let mut acc = 0.0;
    for t in 0..budget as usize {
        let y = trace_best[t.min(trace_best.len() - 1)];
        let norm = (y.clamp(clip_lo, clip_hi).log10() - lo_log) / span;
        acc += 1.0 - norm;
    }
    Ok(acc / budget as f64)
}

/// Subtracts the known optimum from every trace value so [`aocc`] scores the
/// optimality gap rather than the raw objective.
pub fn gap_adjusted(trace_best: &[f64], known_optimum: Option<f64>) -> Vec<f64> {
    match known_optimum {
        Some(opt) => trace_best.iter().map(|v| v - opt).collect(),
        None => trace_best.to_vec(),
    }
}

//! The feature catalog: 26 numeric summaries of a sampled landscape, in
//! seven groups. Values may come out non-finite (underdetermined fits,
//! degenerate spreads); distribution building imputes those later, so this
//! module reports exactly what the estimators produce.

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};

use super::sample::PairwiseDistances;
use super::{feature_group, ElaError};

/// Canonical catalog order. Pruning and serialization preserve it.
pub const FEATURE_NAMES: [&str; 26] = [
    "distr.skewness",
    "distr.kurtosis",
    "distr.n_peaks",
    "levelset.mmce_lda_q10",
    "levelset.mmce_lda_q25",
    "levelset.mmce_lda_q50",
    "levelset.mmce_qda_q10",
    "levelset.mmce_qda_q25",
    "levelset.mmce_qda_q50",
    "metamodel.lin_r2_adj",
    "metamodel.lin_slope_ratio",
    "metamodel.quad_r2_adj",
    "metamodel.quad_cond",
    "disp.ratio_mean_q02",
    "disp.ratio_mean_q05",
    "disp.ratio_mean_q10",
    "disp.ratio_mean_q25",
    "nbc.nb_nn_mean_ratio",
    "nbc.nb_nn_sd_ratio",
    "nbc.nn_nb_cor",
    "pca.expl_var_x",
    "pca.expl_var_xy",
    "pca.pc1_var_xy",
    "ic.h_max",
    "ic.eps_s",
    "ic.m0",
];

#[derive(Debug, Clone)]
pub struct FeatureOptions {
    /// Grid resolution for the kernel density estimate behind `distr.n_peaks`.
    pub kde_grid_points: usize,
    /// A mode counts only if its prominence exceeds this fraction of the
    /// density maximum.
    pub peak_prominence: f64,
    /// Objective quantiles that define the level-set splits.
    pub levelset_quantiles: [f64; 3],
    /// Diagonal loading for the discriminant covariance estimates.
    pub ridge: f64,
    /// Above this dimension the full quadratic model is skipped.
    pub quad_max_dim: usize,
    /// Best-point fractions for the dispersion ratios.
    pub dispersion_quantiles: [f64; 4],
    /// Cumulative variance level for the explained-variance features.
    pub pca_threshold: f64,
    /// Size of the logarithmic epsilon grid for information content.
    pub ic_eps_points: usize,
    /// Smallest epsilon on that grid.
    pub ic_eps_floor: f64,
    /// Information threshold under which the symbol sequence counts as
    /// settled.
    pub ic_settle: f64,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            kde_grid_points: 512,
            peak_prominence: 0.01,
            levelset_quantiles: [0.10, 0.25, 0.50],
            ridge: 1e-6,
            quad_max_dim: 20,
            dispersion_quantiles: [0.02, 0.05, 0.10, 0.25],
            pca_threshold: 0.9,
            ic_eps_points: 30,
            ic_eps_floor: 1e-6,
            ic_settle: 0.05,
        }
    }
}

/// One subsample to featurize. When the points are rows of a larger design
/// whose distance matrix already exists, pass it with the row indices to
/// avoid recomputing geometry.
#[derive(Debug, Clone, Copy)]
pub struct FeatureInput<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [f64],
    pub precomputed: Option<(&'a PairwiseDistances, &'a [usize])>,
}

enum DistAccess<'a> {
    Mapped(&'a PairwiseDistances, &'a [usize]),
    Owned(PairwiseDistances),
}

impl DistAccess<'_> {
    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            DistAccess::Mapped(m, idx) => m.get(idx[i], idx[j]),
            DistAccess::Owned(m) => m.get(i, j),
        }
    }
}

/// Computes features for one subsample. `wanted = None` yields the full
/// catalog in canonical order; otherwise exactly the requested names in the
/// requested order, touching only the groups involved.
pub fn compute_features(
    input: &FeatureInput,
    opts: &FeatureOptions,
    wanted: Option<&[String]>,
) -> Result<IndexMap<String, f64>, ElaError> {
    let n = input.x.len();
    if n != input.y.len() {
        return Err(ElaError::LengthMismatch { x: n, y: input.y.len() });
    }
    if n < 4 {
        return Err(ElaError::DegenerateSample(format!("{n} points is too few")));
    }
    let dim = input.x[0].len();
    if dim == 0 {
        return Err(ElaError::DegenerateSample("zero-dimensional points".into()));
    }
    if let Some(names) = wanted {
        for name in names {
            if !FEATURE_NAMES.contains(&name.as_str()) {
                return Err(ElaError::UnknownFeature(name.clone()));
            }
        }
    }
    if let Some((m, idx)) = input.precomputed {
        if idx.len() != n {
            return Err(ElaError::LengthMismatch { x: n, y: idx.len() });
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= m.len()) {
            return Err(ElaError::DegenerateSample(format!(
                "distance index {bad} out of range {}",
                m.len()
            )));
        }
    }

    let group_wanted = |group: &str| -> bool {
        match wanted {
            None => true,
            Some(names) => names.iter().any(|f| feature_group(f) == group),
        }
    };

    let dist: Option<DistAccess> =
        if group_wanted("disp") || group_wanted("nbc") || group_wanted("ic") {
            Some(match input.precomputed {
                Some((m, idx)) => DistAccess::Mapped(m, idx),
                None => DistAccess::Owned(PairwiseDistances::compute(input.x)),
            })
        } else {
            None
        };

    let mut out: IndexMap<String, f64> = IndexMap::new();
    let mut put = |name: &str, value: f64| {
        out.insert(name.to_string(), value);
    };

    if group_wanted("distr") {
        let (skew, kurt, peaks) = distr_features(input.y, opts);
        put("distr.skewness", skew);
        put("distr.kurtosis", kurt);
        put("distr.n_peaks", peaks);
    }
    if group_wanted("levelset") {
        let v = levelset_features(input.x, input.y, dim, opts);
        put("levelset.mmce_lda_q10", v[0]);
        put("levelset.mmce_lda_q25", v[1]);
        put("levelset.mmce_lda_q50", v[2]);
        put("levelset.mmce_qda_q10", v[3]);
        put("levelset.mmce_qda_q25", v[4]);
        put("levelset.mmce_qda_q50", v[5]);
    }
    if group_wanted("metamodel") {
        let v = metamodel_features(input.x, input.y, dim, opts);
        put("metamodel.lin_r2_adj", v[0]);
        put("metamodel.lin_slope_ratio", v[1]);
        put("metamodel.quad_r2_adj", v[2]);
        put("metamodel.quad_cond", v[3]);
    }
    if group_wanted("disp") {
        let dist = dist.as_ref().expect("distances prepared");
        let v = dispersion_features(input.y, dist, opts);
        put("disp.ratio_mean_q02", v[0]);
        put("disp.ratio_mean_q05", v[1]);
        put("disp.ratio_mean_q10", v[2]);
        put("disp.ratio_mean_q25", v[3]);
    }
    if group_wanted("nbc") {
        let dist = dist.as_ref().expect("distances prepared");
        let v = nbc_features(input.y, dist);
        put("nbc.nb_nn_mean_ratio", v[0]);
        put("nbc.nb_nn_sd_ratio", v[1]);
        put("nbc.nn_nb_cor", v[2]);
    }
    if group_wanted("pca") {
        let v = pca_features(input.x, input.y, dim, opts);
        put("pca.expl_var_x", v[0]);
        put("pca.expl_var_xy", v[1]);
        put("pca.pc1_var_xy", v[2]);
    }
    if group_wanted("ic") {
        let dist = dist.as_ref().expect("distances prepared");
        let v = information_content_features(input.y, dist, opts);
        put("ic.h_max", v[0]);
        put("ic.eps_s", v[1]);
        put("ic.m0", v[2]);
    }

    let order: Vec<&str> = match wanted {
        None => FEATURE_NAMES.to_vec(),
        Some(names) => names.iter().map(String::as_str).collect(),
    };
    let mut result = IndexMap::with_capacity(order.len());
    for name in order {
        let value = *out.get(name).expect("group computed for every wanted feature");
        result.insert(name.to_string(), value);
    }
    Ok(result)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Linear-interpolation quantile on a sorted slice (R type 7).
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

// --- distr ---------------------------------------------------------------

fn distr_features(y: &[f64], opts: &FeatureOptions) -> (f64, f64, f64) {
    let n = y.len() as f64;
    let m = mean(y);
    let m2 = y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m3 = y.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    let m4 = y.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2) - 3.0;
    (skew, kurt, count_density_peaks(y, opts) as f64)
}

/// Number of prominent modes in a Gaussian kernel density estimate of the
/// objective values, with Silverman bandwidth.
fn count_density_peaks(y: &[f64], opts: &FeatureOptions) -> usize {
    let n = y.len();
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sd = sample_sd(y);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * (n as f64).powf(-0.2);
    if !(h > 0.0) || !h.is_finite() {
        return 1; // point mass
    }
    let grid = opts.kde_grid_points.max(8);
    let lo = sorted[0] - 3.0 * h;
    let hi = sorted[n - 1] + 3.0 * h;
    let step = (hi - lo) / (grid - 1) as f64;
    let norm = 1.0 / (n as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    // Contributions beyond eight bandwidths are below any prominence cut.
    let window = 8.0 * h;
    let mut density = Vec::with_capacity(grid);
    for g in 0..grid {
        let t = lo + g as f64 * step;
        let a = sorted.partition_point(|&v| v < t - window);
        let b = sorted.partition_point(|&v| v <= t + window);
        let mut acc = 0.0;
        for &v in &sorted[a..b] {
            let z = (t - v) / h;
            acc += (-0.5 * z * z).exp();
        }
        density.push(acc * norm);
    }
    count_prominent_peaks(&density, opts.peak_prominence)
}

fn count_prominent_peaks(density: &[f64], prominence_frac: f64) -> usize {
    let g = density.len();
    let peak_floor =
        prominence_frac * density.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut count = 0;
    for i in 1..g.saturating_sub(1) {
        if !(density[i] > density[i - 1] && density[i] > density[i + 1]) {
            continue;
        }
        // Prominence: drop to the key saddle on each side, where a side's
        // saddle is the lowest point before terrain rises above the peak.
        let mut left_ref = f64::INFINITY;
        for k in (0..i).rev() {
            left_ref = left_ref.min(density[k]);
            if density[k] > density[i] {
                break;
            }
        }
        let mut right_ref = f64::INFINITY;
        for k in (i + 1)..g {
            right_ref = right_ref.min(density[k]);
            if density[k] > density[i] {
                break;
            }
        }
        if density[i] - left_ref.max(right_ref) >= peak_floor {
            count += 1;
        }
    }
    count.max(1)
}

// --- levelset ------------------------------------------------------------

fn levelset_features(x: &[Vec<f64>], y: &[f64], dim: usize, opts: &FeatureOptions) -> [f64; 6] {
    let n = x.len();
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = [f64::NAN; 6];
    for (qi, &q) in opts.levelset_quantiles.iter().enumerate() {
        let threshold = quantile_sorted(&sorted, q);
        let labels: Vec<bool> = y.iter().map(|&v| v <= threshold).collect();
        let n_good = labels.iter().filter(|&&l| l).count();
        if n_good == 0 || n_good == n {
            // One-class split: the trivial classifier is perfect.
            out[qi] = 0.0;
            out[3 + qi] = 0.0;
            continue;
        }
        out[qi] = discriminant_mmce(x, &labels, dim, opts.ridge, false);
        out[3 + qi] = discriminant_mmce(x, &labels, dim, opts.ridge, true);
    }
    out
}

/// Resubstitution misclassification rate of a Gaussian discriminant. With
/// `quadratic` false both classes share the pooled covariance (linear
/// boundary); otherwise each class keeps its own.
fn discriminant_mmce(
    x: &[Vec<f64>],
    labels: &[bool],
    dim: usize,
    ridge: f64,
    quadratic: bool,
) -> f64 {
    let n = x.len();
    let idx_good: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
    let idx_bad: Vec<usize> = (0..n).filter(|&i| !labels[i]).collect();

    let mean_of = |idx: &[usize]| -> DVector<f64> {
        let mut m = DVector::zeros(dim);
        for &i in idx {
            for j in 0..dim {
                m[j] += x[i][j];
            }
        }
        m / idx.len() as f64
    };
    let mu_g = mean_of(&idx_good);
    let mu_b = mean_of(&idx_bad);

    let scatter = |idx: &[usize], mu: &DVector<f64>| -> DMatrix<f64> {
        let mut s = DMatrix::zeros(dim, dim);
        for &i in idx {
            let d = DVector::from_fn(dim, |j, _| x[i][j] - mu[j]);
            s += &d * d.transpose();
        }
        s
    };

    let prior_g = (idx_good.len() as f64 / n as f64).ln();
    let prior_b = (idx_bad.len() as f64 / n as f64).ln();

    let class_cov = |idx: &[usize], mu: &DVector<f64>| -> DMatrix<f64> {
        if idx.len() < 2 {
            return DMatrix::identity(dim, dim) * ridge;
        }
        scatter(idx, mu) / (idx.len() - 1) as f64
    };

    let score: Box<dyn Fn(&[f64]) -> (f64, f64)> = if quadratic {
        let (chol_g, logdet_g) = loaded_cholesky(class_cov(&idx_good, &mu_g), dim, ridge);
        let (chol_b, logdet_b) = loaded_cholesky(class_cov(&idx_bad, &mu_b), dim, ridge);
        Box::new(move |p: &[f64]| {
            let quad = |chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
                        mu: &DVector<f64>|
             -> f64 {
                let d = DVector::from_fn(dim, |j, _| p[j] - mu[j]);
                let solved = chol.solve(&d);
                d.dot(&solved)
            };
            (
                -0.5 * logdet_g - 0.5 * quad(&chol_g, &mu_g) + prior_g,
                -0.5 * logdet_b - 0.5 * quad(&chol_b, &mu_b) + prior_b,
            )
        })
    } else {
        let pooled = if n > 2 {
            (scatter(&idx_good, &mu_g) + scatter(&idx_bad, &mu_b)) / (n - 2) as f64
        } else {
            DMatrix::identity(dim, dim) * ridge
        };
        let (chol, _) = loaded_cholesky(pooled, dim, ridge);
        let w_g = chol.solve(&mu_g);
        let w_b = chol.solve(&mu_b);
        let off_g = -0.5 * mu_g.dot(&w_g) + prior_g;
        let off_b = -0.5 * mu_b.dot(&w_b) + prior_b;
        Box::new(move |p: &[f64]| {
            let xv = DVector::from_row_slice(p);
            (xv.dot(&w_g) + off_g, xv.dot(&w_b) + off_b)
        })
    };

    let mut errors = 0;
    for i in 0..n {
        let (sg, sb) = score(&x[i]);
        let predicted_good = sg >= sb;
        if predicted_good != labels[i] {
            errors += 1;
        }
    }
    errors as f64 / n as f64
}

/// Cholesky factorization with escalating diagonal loading, plus the log
/// determinant of the loaded matrix.
fn loaded_cholesky(
    mut m: DMatrix<f64>,
    dim: usize,
    ridge: f64,
) -> (nalgebra::Cholesky<f64, nalgebra::Dyn>, f64) {
    let mut load = ridge;
    loop {
        let candidate = &m + DMatrix::identity(dim, dim) * load;
        if let Some(chol) = candidate.clone().cholesky() {
            let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            return (chol, logdet);
        }
        load *= 100.0;
        if load > 1e12 {
            // Give up on structure entirely; the identity always factors.
            m = DMatrix::zeros(dim, dim);
        }
    }
}

// --- metamodel -----------------------------------------------------------

fn metamodel_features(x: &[Vec<f64>], y: &[f64], dim: usize, opts: &FeatureOptions) -> [f64; 4] {
    let n = x.len();
    let mut out = [f64::NAN; 4];

    // Column standardization keeps the least-squares systems well scaled;
    // coefficients are mapped back to the original units afterward.
    let col_mean: Vec<f64> = (0..dim).map(|j| mean_col(x, j)).collect();
    let col_sd: Vec<f64> = (0..dim)
        .map(|j| {
            let sd = sd_col(x, j, col_mean[j]);
            if sd < 1e-12 {
                1.0
            } else {
                sd
            }
        })
        .collect();
    let z = |i: usize, j: usize| (x[i][j] - col_mean[j]) / col_sd[j];

    let y_vec = DVector::from_row_slice(y);
    let y_mean = mean(y);
    let ss_tot = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum::<f64>();

    // Linear model.
    let p_lin = dim;
    if n > p_lin + 1 && ss_tot > 0.0 {
        let design = DMatrix::from_fn(n, dim + 1, |i, c| if c == 0 { 1.0 } else { z(i, c - 1) });
        if let Some(beta) = least_squares(&design, &y_vec) {
            let resid = &design * &beta - &y_vec;
            let r2 = 1.0 - resid.norm_squared() / ss_tot;
            out[0] = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - 1.0 - p_lin as f64);
            let slopes: Vec<f64> = (0..dim).map(|j| (beta[j + 1] / col_sd[j]).abs()).collect();
            let max_s = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min_s = slopes.iter().copied().fold(f64::INFINITY, f64::min);
            out[1] = max_s / min_s;
        }
    }

    // Full quadratic model with interactions.
    let p_quad = 2 * dim + dim * (dim - 1) / 2;
    if dim <= opts.quad_max_dim && n > p_quad + 1 && ss_tot > 0.0 {
        let mut cols: Vec<Box<dyn Fn(usize) -> f64 + '_>> = Vec::with_capacity(p_quad + 1);
        cols.push(Box::new(|_| 1.0));
        for j in 0..dim {
            cols.push(Box::new(move |i| z(i, j)));
        }
        let square_start = cols.len();
        for j in 0..dim {
            cols.push(Box::new(move |i| z(i, j) * z(i, j)));
        }
        for j in 0..dim {
            for k in (j + 1)..dim {
                cols.push(Box::new(move |i| z(i, j) * z(i, k)));
            }
        }
        let design = DMatrix::from_fn(n, cols.len(), |i, c| cols[c](i));
        if let Some(beta) = least_squares(&design, &y_vec) {
            let resid = &design * &beta - &y_vec;
            let r2 = 1.0 - resid.norm_squared() / ss_tot;
            out[2] = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - 1.0 - p_quad as f64);
            let squares: Vec<f64> = (0..dim)
                .map(|j| (beta[square_start + j] / (col_sd[j] * col_sd[j])).abs())
                .collect();
            let max_c = squares.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min_c = squares.iter().copied().fold(f64::INFINITY, f64::min);
            out[3] = max_c / min_c;
        }
    }
    out
}

fn mean_col(x: &[Vec<f64>], j: usize) -> f64 {
    x.iter().map(|p| p[j]).sum::<f64>() / x.len() as f64
}

fn sd_col(x: &[Vec<f64>], j: usize, m: f64) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    (x.iter().map(|p| (p[j] - m) * (p[j] - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

fn least_squares(design: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    design.clone().svd(true, true).solve(y, 1e-12).ok()
}

// --- disp ----------------------------------------------------------------

fn dispersion_features(y: &[f64], dist: &DistAccess, opts: &FeatureOptions) -> [f64; 4] {
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));

    let mean_pairwise = |idx: &[usize]| -> f64 {
        let k = idx.len();
        let mut sum = 0.0;
        for a in 0..k {
            for b in (a + 1)..k {
                sum += dist.get(idx[a], idx[b]);
            }
        }
        sum / (k * (k - 1) / 2) as f64
    };

    let all_mean = mean_pairwise(&order);
    let mut out = [f64::NAN; 4];
    for (qi, &q) in opts.dispersion_quantiles.iter().enumerate() {
        let k = ((q * n as f64).ceil() as usize).max(2).min(n);
        out[qi] = mean_pairwise(&order[..k]) / all_mean;
    }
    out
}

// --- nbc -----------------------------------------------------------------

fn nbc_features(y: &[f64], dist: &DistAccess) -> [f64; 3] {
    let n = y.len();
    let mut nn = vec![f64::INFINITY; n];
    let mut nb = vec![f64::NAN; n];
    for i in 0..n {
        let mut nearest = f64::INFINITY;
        let mut nearest_better = f64::INFINITY;
        let mut has_better = false;
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = dist.get(i, j);
            nearest = nearest.min(d);
            if y[j] < y[i] {
                has_better = true;
                nearest_better = nearest_better.min(d);
            }
        }
        nn[i] = nearest;
        if has_better {
            nb[i] = nearest_better;
        }
    }
    let included: Vec<usize> = (0..n).filter(|&i| nb[i].is_finite()).collect();
    let nb_vals: Vec<f64> = included.iter().map(|&i| nb[i]).collect();
    let nn_incl: Vec<f64> = included.iter().map(|&i| nn[i]).collect();

    let mean_ratio = mean(&nb_vals) / mean(&nn);
    let sd_ratio = sample_sd(&nb_vals) / sample_sd(&nn);
    let cor = pearson(&nn_incl, &nb_vals);
    [mean_ratio, sd_ratio, cor]
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    if n < 2 {
        return f64::NAN;
    }
    let (ma, mb) = (mean(a), mean(b));
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for i in 0..n {
        num += (a[i] - ma) * (b[i] - mb);
        da += (a[i] - ma) * (a[i] - ma);
        db += (b[i] - mb) * (b[i] - mb);
    }
    num / (da * db).sqrt()
}

// --- pca -----------------------------------------------------------------

fn pca_features(x: &[Vec<f64>], y: &[f64], dim: usize, opts: &FeatureOptions) -> [f64; 3] {
    let eig_x = covariance_eigenvalues(x, None, dim);
    let eig_xy = covariance_eigenvalues(x, Some(y), dim + 1);

    let explained = |eig: &[f64]| -> f64 {
        let total: f64 = eig.iter().sum();
        if !(total > 0.0) {
            return f64::NAN;
        }
        let mut acc = 0.0;
        for (k, &v) in eig.iter().enumerate() {
            acc += v;
            if acc >= opts.pca_threshold * total {
                return (k + 1) as f64;
            }
        }
        eig.len() as f64
    };

    let expl_x = explained(&eig_x) / dim as f64;
    let expl_xy = explained(&eig_xy) / (dim + 1) as f64;
    let total_xy: f64 = eig_xy.iter().sum();
    let pc1 = if total_xy > 0.0 { eig_xy[0] / total_xy } else { f64::NAN };
    [expl_x, expl_xy, pc1]
}

/// Eigenvalues of the covariance matrix of the points (optionally augmented
/// with the objective as an extra coordinate), sorted descending and clamped
/// to be non-negative.
fn covariance_eigenvalues(x: &[Vec<f64>], y: Option<&[f64]>, cols: usize) -> Vec<f64> {
    let n = x.len();
    let value = |i: usize, j: usize| -> f64 {
        if j < x[i].len() {
            x[i][j]
        } else {
            y.expect("augmented column")[i]
        }
    };
    let means: Vec<f64> =
        (0..cols).map(|j| (0..n).map(|i| value(i, j)).sum::<f64>() / n as f64).collect();
    let mut cov: DMatrix<f64> = DMatrix::zeros(cols, cols);
    for i in 0..n {
        for a in 0..cols {
            let da = value(i, a) - means[a];
            for b in a..cols {
                cov[(a, b)] += da * (value(i, b) - means[b]);
            }
        }
    }
    let denom = (n - 1).max(1) as f64;
    for a in 0..cols {
        for b in a..cols {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let mut eig: Vec<f64> =
        cov.symmetric_eigen().eigenvalues.iter().map(|&v: &f64| v.max(0.0)).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig
}

// --- ic ------------------------------------------------------------------

fn information_content_features(y: &[f64], dist: &DistAccess, opts: &FeatureOptions) -> [f64; 3] {
    let n = y.len();
    if n < 3 {
        return [f64::NAN; 3];
    }
    // Greedy nearest-neighbor tour from the first point; ties resolve to the
    // lowest index so the path is deterministic.
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    let mut current = 0usize;
    visited[0] = true;
    tour.push(0);
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut best = f64::INFINITY;
        for j in 0..n {
            if !visited[j] {
                let d = dist.get(current, j);
                if d < best {
                    best = d;
                    next = j;
                }
            }
        }
        visited[next] = true;
        tour.push(next);
        current = next;
    }
    let dy: Vec<f64> = tour.windows(2).map(|w| y[w[1]] - y[w[0]]).collect();

    let max_abs = dy.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let floor = opts.ic_eps_floor;
    // Grid kept as (log10 eps, eps) pairs so the settling feature reports
    // the exponent without a second rounding through log10.
    let grid: Vec<(f64, f64)> = if max_abs <= floor {
        vec![(floor.log10(), floor)]
    } else {
        let (l0, l1) = (floor.log10(), max_abs.log10());
        (0..opts.ic_eps_points)
            .map(|k| {
                let e = l0 + (l1 - l0) * k as f64 / (opts.ic_eps_points - 1) as f64;
                (e, 10f64.powf(e))
            })
            .collect()
    };

    let entropy = |eps: f64| -> f64 {
        let symbols: Vec<i8> = dy
            .iter()
            .map(|&d| {
                if d.abs() <= eps {
                    0
                } else if d > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        let pairs = symbols.len() - 1;
        if pairs == 0 {
            return 0.0;
        }
        let mut counts = [0usize; 6];
        for w in symbols.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a == b {
                continue;
            }
            // Six ordered unequal pairs over {-1, 0, 1}.
            let slot = match (a, b) {
                (-1, 0) => 0,
                (-1, 1) => 1,
                (0, -1) => 2,
                (0, 1) => 3,
                (1, -1) => 4,
                (1, 0) => 5,
                _ => unreachable!(),
            };
            counts[slot] += 1;
        }
        let mut h = 0.0;
        for &c in &counts {
            if c > 0 {
                let p = c as f64 / pairs as f64;
                h -= p * p.log(6.0);
            }
        }
        h
    };

    let mut h_max = 0.0f64;
    let mut eps_s = f64::NAN;
    for &(exponent, eps) in &grid {
        let h = entropy(eps);
        h_max = h_max.max(h);
        if eps_s.is_nan() && h < opts.ic_settle {
            eps_s = exponent;
        }
    }
    if eps_s.is_nan() {
        // The largest epsilon silences every change, so this is a numeric
        // safety net rather than a reachable branch.
        eps_s = grid.last().unwrap().0;
    }

    // Partial information content at zero tolerance: length of the
    // sign-change string after dropping zeros and collapsing repeats.
    let mut m0_len = 0usize;
    let mut last: i8 = 0;
    for &d in &dy {
        let s: i8 = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        };
        if s != 0 && s != last {
            m0_len += 1;
            last = s;
        }
    }
    let m0 = m0_len as f64 / dy.len() as f64;

    [h_max, eps_s, m0]
}

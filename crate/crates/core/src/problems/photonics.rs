//! Thin-film design problems built on the characteristic-matrix engine.

use num_complex::Complex64;

use super::tmm::LayerStack;
use super::ProblemError;
use crate::problem::{Problem, ProblemSpec};
use crate::rng::seeded_rng;
use rand::Rng;

/// Target wavelength for the Bragg mirror instances, nm.
pub const BRAGG_WAVELENGTH: f64 = 600.0;
/// Per-layer thickness bounds for the Bragg instances, nm.
pub const BRAGG_THICKNESS: (f64, f64) = (0.0, 218.0);
/// Alternating layer permittivities for the Bragg instances.
pub const BRAGG_PERMITTIVITIES: (f64, f64) = (1.96, 3.24);
/// Substrate index shared by the Bragg and ellipsometry instances.
pub const GLASS_SUBSTRATE: f64 = 1.5;

/// Wavelength grid shared by the spectrum-averaging objectives, nm.
fn wavelength_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + step * i as f64).collect()
}

/// Alternating refractive indices for `n_layers`, lower-index material on
/// top (the ambient side).
fn alternating_indices(n_layers: usize, eps: (f64, f64)) -> Vec<f64> {
    let (lo, hi) = (eps.0.sqrt(), eps.1.sqrt());
    (0..n_layers).map(|i| if i % 2 == 0 { lo } else { hi }).collect()
}

/// Bragg mirror: choose `n_layers` thicknesses to maximize reflectance at
/// 600 nm with fixed alternating materials. Minimized as `1 - R`.
///
/// 10 layers is the "mini" instance, 20 the full one.
pub fn make_bragg_problem(n_layers: usize) -> Result<Problem, ProblemError> {
    if n_layers == 0 {
        return Err(ProblemError::NonPhysical("bragg needs at least one layer".into()));
    }
    let indices = alternating_indices(n_layers, BRAGG_PERMITTIVITIES);
    let name = if n_layers == 10 { "mini-bragg".to_string() } else { format!("bragg-{n_layers}") };
    let name = if n_layers == 20 { "bragg".to_string() } else { name };
    let spec = ProblemSpec {
        name,
        dim: n_layers,
        lower: vec![BRAGG_THICKNESS.0; n_layers],
        upper: vec![BRAGG_THICKNESS.1; n_layers],
        maximize: true,
        known_optimum: None,
        score_clip: None,
    };
    let problem = Problem::new(spec, move |x: &[f64]| {
        let stack = LayerStack::new(
            x.to_vec(),
            indices.clone(),
            1.0,
            Complex64::new(GLASS_SUBSTRATE, 0.0),
        )
        .expect("feasible bragg stack");
        1.0 - stack.reflectance(BRAGG_WAVELENGTH).expect("positive wavelength")
    })?;
    Ok(problem)
}

/// Quarter-wave thicknesses for the Bragg material sequence, the analytic
/// near-optimum used by tests and demos.
pub fn bragg_quarter_wave(n_layers: usize) -> Vec<f64> {
    alternating_indices(n_layers, BRAGG_PERMITTIVITIES)
        .iter()
        .map(|n| BRAGG_WAVELENGTH / (4.0 * n))
        .collect()
}

/// Fixed internal seed for the hidden ellipsometry ground truth. Not derived
/// from user seeds: the instance must be identical in every session.
const ELLIPSOMETRY_SEED: u64 = 0xE11;

/// Ellipsometry-style inverse problem: recover a film's (thickness,
/// permittivity) from its reflectance spectrum. Objective is the RMS mismatch
/// against the hidden ground-truth spectrum, so the optimum value is 0.
pub fn make_ellipsometry_problem() -> Result<Problem, ProblemError> {
    let grid = wavelength_grid(375.0, 750.0, 100);
    let (t_true, eps_true): (f64, f64) = {
        let mut rng = seeded_rng(ELLIPSOMETRY_SEED, 0);
        (rng.gen_range(50.0..150.0), rng.gen_range(1.1..3.0))
    };
    let reference: Vec<f64> = {
        let stack = LayerStack::new(
            vec![t_true],
            vec![eps_true.sqrt()],
            1.0,
            Complex64::new(GLASS_SUBSTRATE, 0.0),
        )?;
        grid.iter().map(|wl| stack.reflectance(*wl).expect("grid wavelengths")).collect()
    };
    let spec = ProblemSpec {
        name: "ellipsometry".into(),
        dim: 2,
        lower: vec![50.0, 1.1],
        upper: vec![150.0, 3.0],
        maximize: false,
        known_optimum: Some(0.0),
        score_clip: None,
    };
    let problem = Problem::new(spec, move |x: &[f64]| {
        let stack = LayerStack::new(
            vec![x[0]],
            vec![x[1].sqrt()],
            1.0,
            Complex64::new(GLASS_SUBSTRATE, 0.0),
        )
        .expect("feasible film");
        let mse = grid
            .iter()
            .zip(&reference)
            .map(|(wl, r_ref)| {
                let r = stack.reflectance(*wl).expect("grid wavelengths");
                (r - r_ref) * (r - r_ref)
            })
            .sum::<f64>()
            / grid.len() as f64;
        mse.sqrt()
    })?;
    Ok(problem)
}

/// The hidden ellipsometry truth, exposed for tests only.
pub fn ellipsometry_truth() -> (f64, f64) {
    let mut rng = seeded_rng(ELLIPSOMETRY_SEED, 0);
    (rng.gen_range(50.0..150.0), rng.gen_range(1.1..3.0))
}

/// Anti-reflection coating for a photovoltaic absorber: 10 alternating
/// layers over an absorbing substrate (`n = 3.5 + 0.1i`). All power that is
/// not reflected enters the semi-infinite absorber, so the spectral
/// absorptance is `1 - R` and the minimized objective is the mean reflectance
/// over 375-750 nm.
pub fn make_photovoltaic_problem() -> Result<Problem, ProblemError> {
    let n_layers = 10;
    let grid = wavelength_grid(375.0, 750.0, 100);
    let indices = alternating_indices(n_layers, (2.0, 3.0));
    let spec = ProblemSpec {
        name: "photovoltaic".into(),
        dim: n_layers,
        lower: vec![30.0; n_layers],
        upper: vec![250.0; n_layers],
        maximize: true,
        known_optimum: None,
        score_clip: None,
    };
    let problem = Problem::new(spec, move |x: &[f64]| {
        let stack =
            LayerStack::new(x.to_vec(), indices.clone(), 1.0, Complex64::new(3.5, 0.1))
                .expect("feasible coating");
        let mean_absorptance = grid
            .iter()
            .map(|wl| 1.0 - stack.reflectance(*wl).expect("grid wavelengths"))
            .sum::<f64>()
            / grid.len() as f64;
        1.0 - mean_absorptance
    })?;
    Ok(problem)
}

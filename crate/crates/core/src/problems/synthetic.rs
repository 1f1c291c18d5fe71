//! Seeded synthetic test functions on `[-5, 5]^D`.
//!
//! Each instance hides its optimum behind a seeded shift so algorithms
//! cannot exploit a fixed origin, and every objective is normalized to value
//! 0 at the shifted optimum.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::ProblemError;
use crate::problem::{Problem, ProblemSpec};
use crate::rng::seeded_rng;

pub const SYNTHETIC_LOWER: f64 = -5.0;
pub const SYNTHETIC_UPPER: f64 = 5.0;
/// Shifts stay inside [-4, 4] so the basin around the optimum is never
/// truncated by the box.
const SHIFT_RANGE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SyntheticId {
    Sphere,
    Rastrigin,
    Rosenbrock,
    Schwefel,
    Griewank,
    Ackley,
    Weierstrass,
    LinearSlope,
}

impl SyntheticId {
    pub const ALL: [SyntheticId; 8] = [
        SyntheticId::Sphere,
        SyntheticId::Rastrigin,
        SyntheticId::Rosenbrock,
        SyntheticId::Schwefel,
        SyntheticId::Griewank,
        SyntheticId::Ackley,
        SyntheticId::Weierstrass,
        SyntheticId::LinearSlope,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SyntheticId::Sphere => "sphere",
            SyntheticId::Rastrigin => "rastrigin",
            SyntheticId::Rosenbrock => "rosenbrock",
            SyntheticId::Schwefel => "schwefel",
            SyntheticId::Griewank => "griewank",
            SyntheticId::Ackley => "ackley",
            SyntheticId::Weierstrass => "weierstrass-like",
            SyntheticId::LinearSlope => "linear-slope",
        }
    }
}

impl fmt::Display for SyntheticId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SyntheticId {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "sphere" => SyntheticId::Sphere,
            "rastrigin" => SyntheticId::Rastrigin,
            "rosenbrock" => SyntheticId::Rosenbrock,
            "schwefel" => SyntheticId::Schwefel,
            "griewank" => SyntheticId::Griewank,
            "ackley" => SyntheticId::Ackley,
            "weierstrass-like" | "weierstrass" => SyntheticId::Weierstrass,
            "linear-slope" => SyntheticId::LinearSlope,
            other => return Err(ProblemError::UnknownFunctionId(other.to_string())),
        })
    }
}

/// Builds the seeded instance `synthetic:<id>:<dim>`. Identical arguments
/// produce an identical instance; the optimum (value 0) sits at the recorded
/// shift.
pub fn synthetic(id: SyntheticId, dim: usize, seed: u64) -> Result<Problem, ProblemError> {
    if dim == 0 {
        return Err(ProblemError::BadName("synthetic dim must be >= 1".into()));
    }
    let mut rng = seeded_rng(seed, 0x5eed);
    let shift: Vec<f64> = match id {
        // The slope's optimum lies in a seeded corner of the box.
        SyntheticId::LinearSlope => (0..dim)
            .map(|_| if rng.gen::<bool>() { SYNTHETIC_UPPER } else { SYNTHETIC_LOWER })
            .collect(),
        _ => (0..dim).map(|_| rng.gen_range(-SHIFT_RANGE..SHIFT_RANGE)).collect(),
    };
    let weights: Vec<f64> = (0..dim).map(|_| rng.gen_range(1.0..10.0)).collect();

    let spec = ProblemSpec {
        name: format!("synthetic:{id}:{dim}"),
        dim,
        lower: vec![SYNTHETIC_LOWER; dim],
        upper: vec![SYNTHETIC_UPPER; dim],
        maximize: false,
        known_optimum: Some(0.0),
        score_clip: None,
    };
    let sh = shift.clone();
    Problem::new(spec, move |x: &[f64]| {
        let z: Vec<f64> = x.iter().zip(&sh).map(|(x, s)| x - s).collect();
        match id {
            SyntheticId::Sphere => z.iter().map(|v| v * v).sum(),
            SyntheticId::Rastrigin => {
                10.0 * z.len() as f64
                    + z.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
            }
            SyntheticId::Rosenbrock => {
                // Optimum moved from the all-ones point onto the shift.
                let w: Vec<f64> = z.iter().map(|v| v + 1.0).collect();
                w.windows(2)
                    .map(|p| 100.0 * (p[1] - p[0] * p[0]).powi(2) + (1.0 - p[0]).powi(2))
                    .sum()
            }
            SyntheticId::Schwefel => z.iter().map(|v| schwefel_term(*v) - schwefel_term(0.0)).sum(),
            SyntheticId::Griewank => {
                let sum = z.iter().map(|v| v * v).sum::<f64>() / 4000.0;
                let prod: f64 = z
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                1.0 + sum - prod
            }
            SyntheticId::Ackley => {
                let d = z.len() as f64;
                let rms = (z.iter().map(|v| v * v).sum::<f64>() / d).sqrt();
                let cos_mean = z.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
                20.0 + E - 20.0 * (-0.2 * rms).exp() - cos_mean.exp()
            }
            SyntheticId::Weierstrass => {
                z.iter().map(|v| weierstrass_term(*v) - weierstrass_term(0.0)).sum()
            }
            SyntheticId::LinearSlope => z
                .iter()
                .zip(&weights)
                .zip(&sh)
                .map(|((zv, w), corner)| w * -zv * corner.signum())
                .sum(),
        }
    })
    .map_err(|e| ProblemError::BadName(e.to_string()))
}

/// One coordinate of the classic deceptive multimodal surface; the global
/// basin sits near 420.97 in the unshifted coordinate.
fn schwefel_term(z: f64) -> f64 {
    let v = z + 420.968_746_227_503_6;
    -v * v.abs().sqrt().sin()
}

/// Fractal-like sum of cosines, minimized at 0 in each coordinate.
fn weierstrass_term(z: f64) -> f64 {
    let (a, b): (f64, f64) = (0.5, 3.0);
    (0..=11).map(|k| a.powi(k) * (2.0 * PI * b.powi(k) * (z + 0.5)).cos()).sum()
}

/// The shift vector of a synthetic instance, for tests and audits.
pub fn synthetic_shift(id: SyntheticId, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed, 0x5eed);
    match id {
        SyntheticId::LinearSlope => (0..dim)
            .map(|_| if rng.gen::<bool>() { SYNTHETIC_UPPER } else { SYNTHETIC_LOWER })
            .collect(),
        _ => (0..dim).map(|_| rng.gen_range(-SHIFT_RANGE..SHIFT_RANGE)).collect(),
    }
}

//! The searchable space of optimizer configurations.
//!
//! One flat, JSON-serializable config describes random search, modular
//! differential evolution, and LSHADE. Flatness is deliberate: proposers
//! (including language models) emit plain key-value JSON and the same schema
//! validates every family. Fields that a family does not use are carried but
//! ignored at run time.

mod engine;

pub use engine::{run, AlgoError};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::RandomStream;

/// Success-history length shared by all adaptive variants.
pub const MEMORY_SIZE: usize = 6;
/// Minimum population LSHADE shrinks to.
pub const MIN_POPULATION: u32 = 4;
/// Greedy fraction used by the LSHADE baseline.
pub const LSHADE_BASELINE_PBEST: f64 = 0.11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Rs,
    De,
    Lshade,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Rs => "rs",
            Family::De => "de",
            Family::Lshade => "lshade",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    Rand1,
    Best1,
    CurrentToPbest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Crossover {
    Binomial,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundHandling {
    Clip,
    Reflect,
}

/// Serde helper: the literal string `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutoWord {
    #[serde(rename = "auto")]
    Auto,
}

/// Population size: an explicit count or `"auto"`, which resolves to
/// `max(5, 4 + floor(3 ln D))` at run time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PopulationSize {
    Fixed(u32),
    Auto(AutoWord),
}

impl PopulationSize {
    pub const AUTO: PopulationSize = PopulationSize::Auto(AutoWord::Auto);

    pub fn resolve(&self, dim: usize) -> u32 {
        match self {
            PopulationSize::Fixed(n) => *n,
            PopulationSize::Auto(_) => {
                let auto = 4 + (3.0 * (dim as f64).ln()).floor() as u32;
                auto.max(5)
            }
        }
    }
}

/// Serde helper: the literal string `"adaptive"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdaptiveWord {
    #[serde(rename = "adaptive")]
    Adaptive,
}

/// A control parameter: a fixed value or success-history adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ControlParam {
    Fixed(f64),
    Adaptive(AdaptiveWord),
}

impl ControlParam {
    pub const ADAPTIVE: ControlParam = ControlParam::Adaptive(AdaptiveWord::Adaptive);

    pub fn is_adaptive(&self) -> bool {
        matches!(self, ControlParam::Adaptive(_))
    }

    pub fn fixed(&self) -> Option<f64> {
        match self {
            ControlParam::Fixed(v) => Some(*v),
            ControlParam::Adaptive(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestartPolicy {
    None,
    OnStagnation,
}

/// One point in the algorithm configuration space. Unknown fields are
/// rejected; omitted fields take their defaults, so partial configurations
/// (a proposer's reply, a config-file fragment) stay usable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub family: Family,
    pub population_size: PopulationSize,
    pub mutation: Mutation,
    /// Greedy fraction for current-to-pbest; ignored by other strategies.
    pub pbest_fraction: f64,
    pub crossover: Crossover,
    pub f: ControlParam,
    pub cr: ControlParam,
    /// Keep replaced parents in an external archive for pbest mutation.
    pub archive: bool,
    /// Linear population-size reduction over the budget.
    pub lpsr: bool,
    pub restart: RestartPolicy,
    /// Stagnation window in generations; ignored when restart is `none`.
    pub restart_window: u32,
    /// Relative improvement below which a generation counts as stagnant.
    pub restart_tol: f64,
    pub bound_handling: BoundHandling,
}

impl Default for AlgorithmConfig {
    /// The session starting point: plain DE/rand/1/bin.
    fn default() -> Self {
        AlgorithmConfig {
            family: Family::De,
            population_size: PopulationSize::AUTO,
            mutation: Mutation::Rand1,
            pbest_fraction: 0.1,
            crossover: Crossover::Binomial,
            f: ControlParam::Fixed(0.5),
            cr: ControlParam::Fixed(0.9),
            archive: false,
            lpsr: false,
            restart: RestartPolicy::None,
            restart_window: 10,
            restart_tol: 1e-12,
            bound_handling: BoundHandling::Clip,
        }
    }
}

impl AlgorithmConfig {
    /// Checks ranges and family coherence. LSHADE is a preset, not a free
    /// combination: it requires current-to-pbest, adaptive F and CR, the
    /// archive, and population reduction.
    pub fn validate(&self) -> Result<(), AlgoError> {
        if let PopulationSize::Fixed(n) = self.population_size {
            if self.family != Family::Rs && n < MIN_POPULATION {
                return Err(AlgoError::InvalidConfig(format!(
                    "population_size {n} < {MIN_POPULATION} for family {}",
                    self.family.as_str()
                )));
            }
            if n > 100_000 {
                return Err(AlgoError::InvalidConfig(format!("population_size {n} is absurd")));
            }
        }
        if let Some(f) = self.f.fixed() {
            if !(f > 0.0 && f <= 2.0 && f.is_finite()) {
                return Err(AlgoError::InvalidConfig(format!("f = {f} outside (0, 2]")));
            }
        }
        if let Some(cr) = self.cr.fixed() {
            if !((0.0..=1.0).contains(&cr) && cr.is_finite()) {
                return Err(AlgoError::InvalidConfig(format!("cr = {cr} outside [0, 1]")));
            }
        }
        if !(self.pbest_fraction > 0.0 && self.pbest_fraction <= 0.5) {
            return Err(AlgoError::InvalidConfig(format!(
                "pbest_fraction = {} outside (0, 0.5]",
                self.pbest_fraction
            )));
        }
        if self.restart == RestartPolicy::OnStagnation {
            if self.restart_window == 0 {
                return Err(AlgoError::InvalidConfig("restart_window must be >= 1".into()));
            }
            if !(self.restart_tol > 0.0 && self.restart_tol.is_finite()) {
                return Err(AlgoError::InvalidConfig(format!(
                    "restart_tol = {} must be positive",
                    self.restart_tol
                )));
            }
        }
        if self.family == Family::Lshade {
            if self.mutation != Mutation::CurrentToPbest {
                return Err(AlgoError::InvalidConfig("lshade requires current-to-pbest".into()));
            }
            if !self.f.is_adaptive() || !self.cr.is_adaptive() {
                return Err(AlgoError::InvalidConfig("lshade requires adaptive f and cr".into()));
            }
            if !self.archive || !self.lpsr {
                return Err(AlgoError::InvalidConfig(
                    "lshade requires the archive and population reduction".into(),
                ));
            }
        }
        Ok(())
    }

    /// Repairs family coherence after a mutation, never loosening a valid
    /// config.
    pub fn normalize(&mut self) {
        if self.family == Family::Lshade {
            self.mutation = Mutation::CurrentToPbest;
            self.f = ControlParam::ADAPTIVE;
            self.cr = ControlParam::ADAPTIVE;
            self.archive = true;
            self.lpsr = true;
        }
        if self.family != Family::Rs {
            if let PopulationSize::Fixed(n) = &mut self.population_size {
                *n = (*n).max(MIN_POPULATION);
            }
        }
    }
}

/// Mutation step size for [`mutate_config`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSize {
    /// Perturb one field: numeric values move by at most 20%, categorical
    /// values re-draw to a different choice.
    Small,
    /// Re-draw up to three distinct fields from the full space.
    Large,
}

/// Discrete greedy fractions proposers draw from.
pub const PBEST_CHOICES: [f64; 3] = [0.05, 0.1, 0.2];
const RESTART_WINDOW_CHOICES: [u32; 3] = [5, 10, 20];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Family,
    Population,
    Mutation,
    PbestFraction,
    Crossover,
    F,
    Cr,
    Archive,
    Lpsr,
    Restart,
    BoundHandling,
}

const FIELDS: [Field; 11] = [
    Field::Family,
    Field::Population,
    Field::Mutation,
    Field::PbestFraction,
    Field::Crossover,
    Field::F,
    Field::Cr,
    Field::Archive,
    Field::Lpsr,
    Field::Restart,
    Field::BoundHandling,
];

/// Random neighbor of `config` in the configuration space. The result is
/// always valid: family coherence is re-normalized after the raw edit.
pub fn mutate_config(
    config: &AlgorithmConfig,
    step: StepSize,
    rng: &mut RandomStream,
) -> AlgorithmConfig {
    let mut next = config.clone();
    let edits = match step {
        StepSize::Small => 1,
        StepSize::Large => rng.gen_range(1..=3),
    };
    let mut fields = FIELDS.to_vec();
    fields.shuffle(rng);
    for field in fields.into_iter().take(edits) {
        mutate_field(&mut next, field, step, rng);
    }
    next.normalize();
    debug_assert!(next.validate().is_ok(), "mutation produced invalid config");
    next
}

fn jitter(value: f64, lo: f64, hi: f64, rng: &mut RandomStream) -> f64 {
    (value * rng.gen_range(0.8..=1.2)).clamp(lo, hi)
}

fn redraw_different<T: Copy + PartialEq>(current: T, choices: &[T], rng: &mut RandomStream) -> T {
    let others: Vec<T> = choices.iter().copied().filter(|c| *c != current).collect();
    *others.choose(rng).expect("at least two choices")
}

fn mutate_field(cfg: &mut AlgorithmConfig, field: Field, step: StepSize, rng: &mut RandomStream) {
    match field {
        Field::Family => {
            cfg.family =
                redraw_different(cfg.family, &[Family::Rs, Family::De, Family::Lshade], rng);
        }
        Field::Population => {
            cfg.population_size = match (cfg.population_size, step) {
                (PopulationSize::Fixed(n), StepSize::Small) => {
                    PopulationSize::Fixed((jitter(n as f64, 4.0, 1024.0, rng)).round() as u32)
                }
                (PopulationSize::Auto(_), StepSize::Small) => {
                    PopulationSize::Fixed(rng.gen_range(5..=50))
                }
                (_, StepSize::Large) => {
                    if rng.gen_bool(0.3) {
                        PopulationSize::AUTO
                    } else {
                        PopulationSize::Fixed(rng.gen_range(5..=200))
                    }
                }
            };
        }
        Field::Mutation => {
            cfg.mutation = redraw_different(
                cfg.mutation,
                &[Mutation::Rand1, Mutation::Best1, Mutation::CurrentToPbest],
                rng,
            );
        }
        Field::PbestFraction => {
            cfg.pbest_fraction = redraw_different(cfg.pbest_fraction, &PBEST_CHOICES, rng);
        }
        Field::Crossover => {
            cfg.crossover =
                redraw_different(cfg.crossover, &[Crossover::Binomial, Crossover::Exponential], rng);
        }
        Field::F => {
            cfg.f = match (cfg.f, step) {
                (ControlParam::Fixed(v), StepSize::Small) => {
                    ControlParam::Fixed(jitter(v, 0.05, 2.0, rng))
                }
                (ControlParam::Adaptive(_), StepSize::Small) => {
                    ControlParam::Fixed(jitter(0.5, 0.05, 2.0, rng))
                }
                (_, StepSize::Large) => {
                    if rng.gen_bool(0.3) {
                        ControlParam::ADAPTIVE
                    } else {
                        ControlParam::Fixed(rng.gen_range(0.1..=1.0))
                    }
                }
            };
        }
        Field::Cr => {
            cfg.cr = match (cfg.cr, step) {
                (ControlParam::Fixed(v), StepSize::Small) => {
                    ControlParam::Fixed(jitter(v, 0.0, 1.0, rng))
                }
                (ControlParam::Adaptive(_), StepSize::Small) => {
                    ControlParam::Fixed(jitter(0.9, 0.0, 1.0, rng))
                }
                (_, StepSize::Large) => {
                    if rng.gen_bool(0.3) {
                        ControlParam::ADAPTIVE
                    } else {
                        ControlParam::Fixed(rng.gen_range(0.0..=1.0))
                    }
                }
            };
        }
        Field::Archive => cfg.archive = !cfg.archive,
        Field::Lpsr => cfg.lpsr = !cfg.lpsr,
        Field::Restart => match cfg.restart {
            RestartPolicy::None => {
                cfg.restart = RestartPolicy::OnStagnation;
                cfg.restart_window = *RESTART_WINDOW_CHOICES.choose(rng).unwrap();
                cfg.restart_tol = 1e-12;
            }
            RestartPolicy::OnStagnation => match step {
                StepSize::Small => {
                    cfg.restart_window =
                        (jitter(cfg.restart_window as f64, 2.0, 100.0, rng)).round() as u32;
                }
                StepSize::Large => cfg.restart = RestartPolicy::None,
            },
        },
        Field::BoundHandling => {
            cfg.bound_handling = redraw_different(
                cfg.bound_handling,
                &[BoundHandling::Clip, BoundHandling::Reflect],
                rng,
            );
        }
    }
}

/// Pure random search baseline.
pub fn rs_baseline() -> AlgorithmConfig {
    AlgorithmConfig { family: Family::Rs, ..AlgorithmConfig::default() }
}

/// Canonical DE/rand/1/bin baseline: population `10 D` capped at a fifth of
/// the budget.
pub fn de_baseline(dim: usize, budget: u64) -> AlgorithmConfig {
    let pop = (10 * dim as u64).min(budget / 5).max(u64::from(MIN_POPULATION)) as u32;
    AlgorithmConfig {
        family: Family::De,
        population_size: PopulationSize::Fixed(pop),
        mutation: Mutation::Rand1,
        crossover: Crossover::Binomial,
        f: ControlParam::Fixed(0.5),
        cr: ControlParam::Fixed(0.9),
        ..AlgorithmConfig::default()
    }
}

/// Canonical LSHADE baseline: initial population `18 D` capped at a fifth of
/// the budget, shrinking linearly to 4.
pub fn lshade_baseline(dim: usize, budget: u64) -> AlgorithmConfig {
    let pop = (18 * dim as u64).min(budget / 5).max(u64::from(MIN_POPULATION)) as u32;
    AlgorithmConfig {
        family: Family::Lshade,
        population_size: PopulationSize::Fixed(pop),
        mutation: Mutation::CurrentToPbest,
        pbest_fraction: LSHADE_BASELINE_PBEST,
        crossover: Crossover::Binomial,
        f: ControlParam::ADAPTIVE,
        cr: ControlParam::ADAPTIVE,
        archive: true,
        lpsr: true,
        ..AlgorithmConfig::default()
    }
}

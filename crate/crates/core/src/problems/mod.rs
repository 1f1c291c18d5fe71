//! Problem instances and the name registry.
//!
//! Registry grammar: `mini-bragg`, `bragg`, `ellipsometry`, `photovoltaic`,
//! or `synthetic:<id>:<dim>`. Synthetic instances derive their hidden shift
//! from the master seed, so a name plus a seed pins the exact instance.

pub mod photonics;
pub mod synthetic;
pub mod tmm;

pub use photonics::{make_bragg_problem, make_ellipsometry_problem, make_photovoltaic_problem};
pub use synthetic::{synthetic, SyntheticId};
pub use tmm::LayerStack;

use crate::problem::Problem;
use crate::rng::stream_id;

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("unknown problem '{0}' (expected mini-bragg, bragg, ellipsometry, photovoltaic, or synthetic:<id>:<dim>)")]
    UnknownProblem(String),
    #[error("unknown synthetic function id '{0}'")]
    UnknownFunctionId(String),
    #[error("malformed problem name: {0}")]
    BadName(String),
    #[error("non-physical stack: {0}")]
    NonPhysical(String),
    #[error(transparent)]
    Core(#[from] crate::problem::CoreError),
}

/// Looks up a problem by registry name. The master seed only affects
/// synthetic instances (their shift); the photonic instances are fixed.
pub fn problem_by_name(name: &str, master_seed: u64) -> Result<Problem, ProblemError> {
    match name {
        "mini-bragg" => make_bragg_problem(10),
        "bragg" => make_bragg_problem(20),
        "ellipsometry" => make_ellipsometry_problem(),
        "photovoltaic" => make_photovoltaic_problem(),
        other if other.starts_with("synthetic:") => {
            let mut parts = other.splitn(3, ':');
            parts.next(); // "synthetic"
            let id: SyntheticId = parts
                .next()
                .filter(|s| !s.is_empty())
                .ok_or_else(|| ProblemError::BadName(other.to_string()))?
                .parse()?;
            let dim: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .filter(|d| *d >= 1)
                .ok_or_else(|| ProblemError::BadName(format!("{other}: bad dimension")))?;
            synthetic(id, dim, instance_seed(master_seed, id, dim))
        }
        other => Err(ProblemError::UnknownProblem(other.to_string())),
    }
}

/// Seed for one synthetic instance, mixing the master seed with the
/// function id and dimension so pool members never share a shift.
fn instance_seed(master_seed: u64, id: SyntheticId, dim: usize) -> u64 {
    master_seed ^ stream_id(id.as_str()).rotate_left(dim as u32 % 64)
}

/// The eight-function synthetic comparison pool at a given dimension.
/// `exclude` drops one function id, used when the pipeline target itself is
/// synthetic so the pool never contains the target's own family.
pub fn synthetic_pool(
    dim: usize,
    master_seed: u64,
    exclude: Option<SyntheticId>,
) -> Vec<Problem> {
    SyntheticId::ALL
        .iter()
        .filter(|id| Some(**id) != exclude)
        .map(|id| {
            synthetic(*id, dim, instance_seed(master_seed, *id, dim)).expect("valid pool instance")
        })
        .collect()
}

/// Fixed registry names, for usage messages.
pub fn registry_names() -> Vec<String> {
    let mut names =
        vec!["mini-bragg".into(), "bragg".into(), "ellipsometry".into(), "photovoltaic".into()];
    for id in SyntheticId::ALL {
        names.push(format!("synthetic:{id}:<dim>"));
    }
    names
}

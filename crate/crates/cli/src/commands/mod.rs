//! One module per subcommand. Each command reads what it needs from the run
//! directory, writes its artifacts through the manifest, and prints a short
//! summary to stdout.

pub mod baseline;
pub mod discover;
pub mod ela;
pub mod gen_proxies;
pub mod report;
pub mod validate;

pub use baseline::cmd_baseline;
pub use discover::cmd_discover;
pub use ela::cmd_ela;
pub use gen_proxies::cmd_gen_proxies;
pub use report::cmd_report;
pub use validate::cmd_validate;

use proxyforge::problems::{problem_by_name, ProblemError};
use proxyforge::Problem;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::CliError;

/// Resolves the configured target. A name the registry does not know is a
/// usage error; a failed instantiation is a runtime one.
pub fn resolve_problem(config: &PipelineConfig) -> Result<Problem, CliError> {
    problem_by_name(&config.problem, config.master_seed).map_err(|e| match e {
        ProblemError::UnknownProblem(_)
        | ProblemError::UnknownFunctionId(_)
        | ProblemError::BadName(_) => CliError::usage(e.to_string()),
        other => CliError::runtime(other.to_string()),
    })
}

/// Digest of a design matrix, bit-exact over the f64 payload. Stored in the
/// feature artifact so a later rebuild of the same design can prove it
/// reproduced the geometry before trusting cached objective values.
pub fn design_digest(x: &[Vec<f64>]) -> String {
    let mut hasher = Sha256::new();
    for row in x {
        for v in row {
            hasher.update(v.to_le_bytes());
        }
    }
    hex::encode(&hasher.finalize()[..8])
}

/// Median of a sample; NaN when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

/// Interquartile range via the nearest-rank quartiles.
pub fn iqr(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    let q = |p: f64| {
        let idx = (p * (sorted.len() - 1) as f64).round() as usize;
        sorted[idx]
    };
    q(0.75) - q(0.25)
}

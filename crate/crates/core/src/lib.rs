//! proxyforge: landscape-aware discovery of optimization algorithms for
//! expensive black-box problems.
//!
//! The toolkit evolves cheap proxy functions whose landscape-feature
//! distributions match a target problem, searches for algorithm
//! configurations against those proxies, and spends real evaluations only to
//! validate the final champions.
//!
//! Module map:
//! - [`problem`]: problem abstraction, budgeted evaluation, run records
//! - [`metrics`]: budget-normalized performance scores
//! - [`rng`]: seeded, stream-separated randomness
//! - [`problems`]: thin-film photonics instances and a synthetic suite
//! - [`ela`]: landscape features, feature distributions, Wasserstein distance
//! - [`gpgen`]: typed genetic programming over closed-form proxy functions
//! - [`algospace`]: modular DE/LSHADE/random-search configuration space
//! - [`designer`]: (1+1)-ES discovery loop, proposers, validation

pub mod algospace;
pub mod designer;
pub mod ela;
pub mod gpgen;
pub mod metrics;
pub mod problem;
pub mod problems;
pub mod rng;

pub use problem::{
    BudgetLedger, BudgetedEvaluator, CoreError, EvalKind, Phase, Problem, ProblemSpec, RunRecord,
};
pub use rng::{seeded_rng, RandomStream};

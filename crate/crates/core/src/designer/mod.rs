//! Algorithm discovery: a (1+1)-ES over optimizer configurations, scored on
//! cheap stand-in objectives, with a pluggable proposer and a final
//! small-budget validation pass on the real problem.
//!
//! The loop never touches the real objective in the proxy-driven and
//! benchmark-driven conditions; the [`crate::problem::BudgetLedger`] carried
//! by each session makes that auditable.

pub mod discover;
pub mod llm;
pub mod proposer;
pub mod stub;

pub use discover::{
    champion_set, champion_set_from, discover, score_candidate, select_proxies, validate,
    validate_audited, ChampionReport, DiscoverySession, HistoryEntry, SessionSettings,
    ValidationReport,
};
pub use llm::{LlmProposer, LlmSettings};
pub use proposer::{
    extract_json_object, parse_proposal_text, OfflineMutator, ProposeError, Proposer,
    ProposerRequest, ProposerResponse, CONFIG_SCHEMA,
};
pub use stub::{StubBehavior, StubServer};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gpgen::{CompiledProgram, ExpressionTree};
use crate::problem::{Problem, ProblemSpec};
use crate::rng::{labeled_stream, stream_id};

/// Which objectives guide the configuration search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// Generated proxy expressions stand in for the target.
    ProxyDriven,
    /// The nearest benchmark instances stand in for the target.
    BenchmarkDriven,
    /// The target itself is searched against, paying full evaluation cost.
    RealWorldDirect,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::ProxyDriven => "proxy-driven",
            Condition::BenchmarkDriven => "benchmark-driven",
            Condition::RealWorldDirect => "real-world-direct",
        }
    }
}

impl std::str::FromStr for Condition {
    type Err = DesignerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proxy-driven" => Ok(Condition::ProxyDriven),
            "benchmark-driven" => Ok(Condition::BenchmarkDriven),
            "real-world-direct" => Ok(Condition::RealWorldDirect),
            other => Err(DesignerError::InvalidInput(format!(
                "unknown condition '{other}' (expected proxy-driven, benchmark-driven, or real-world-direct)"
            ))),
        }
    }
}

/// One objective the inner search runs against.
#[derive(Debug, Clone)]
pub enum ProxySource {
    /// A generated expression adopting the target's box and dimension. Any
    /// `rand` leaves draw from a per-run stream, so repetitions are
    /// reproducible.
    Tree { tree: ExpressionTree, spec: ProblemSpec },
    /// An existing problem: a benchmark instance, or the target itself in
    /// the direct condition.
    Fixed(Problem),
}

impl ProxySource {
    pub fn name(&self) -> String {
        match self {
            ProxySource::Tree { tree, .. } => tree.to_string(),
            ProxySource::Fixed(p) => p.name().to_owned(),
        }
    }

    /// Materializes the objective for one run. `run_seed` only matters for
    /// expressions containing `rand`; outputs are forced finite so the
    /// optimizer never sees an unusable value.
    pub fn instantiate(&self, run_seed: u64) -> Result<Problem, DesignerError> {
        match self {
            ProxySource::Fixed(p) => Ok(p.clone()),
            ProxySource::Tree { tree, spec } => {
                let program = CompiledProgram::new(tree);
                let rng = std::sync::Mutex::new(labeled_stream(run_seed, "proxy-rand", 0));
                let problem = Problem::new(spec.clone(), move |x: &[f64]| {
                    let mut guard = rng.lock().expect("proxy rng poisoned");
                    let v = program.eval_point(x, &mut guard);
                    if v.is_finite() {
                        v
                    } else {
                        NONFINITE_PROXY_VALUE
                    }
                })?;
                Ok(problem)
            }
        }
    }
}

/// Stand-in objective value for non-finite expression outputs: far above any
/// score clip, far below overflow.
pub const NONFINITE_PROXY_VALUE: f64 = 1e100;

/// Deterministic seed for a labeled sub-activity of a run.
pub fn sub_seed(base: u64, label: &str, index: u64) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream_id(label))
        .wrapping_add(index)
}

#[derive(Debug, Error)]
pub enum DesignerError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("session already carries history")]
    SessionNotFresh,
    #[error(transparent)]
    Ela(#[from] crate::ela::ElaError),
    #[error(transparent)]
    Algo(#[from] crate::algospace::AlgoError),
    #[error(transparent)]
    Core(#[from] crate::problem::CoreError),
}

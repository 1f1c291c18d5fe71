//! Problem abstraction, budgeted evaluation, and run bookkeeping.
//!
//! Everything downstream minimizes. Problems that are naturally maximization
//! tasks are converted at construction time and keep `maximize = true` as
//! metadata only.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algospace::AlgorithmConfig;

/// Errors from the evaluation core.
#[derive(Debug, thiserror::Error)]
pub enum CoreError {
    #[error("evaluation budget exhausted after {budget} evaluations")]
    BudgetExhausted { budget: u64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid clip range [{lo}, {hi}]: need 0 < lo < hi")]
    InvalidClipRange { lo: f64, hi: f64 },
    #[error("invalid problem spec: {0}")]
    InvalidSpec(String),
    #[error("evaluator already used ({used} evaluations); runs need a fresh one")]
    EvaluatorNotFresh { used: u64 },
    #[error("trace is empty or contains non-finite values")]
    InvalidTrace,
    #[error("budget must be positive")]
    ZeroBudget,
}

/// Static description of a box-constrained problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Original orientation. The stored objective already minimizes.
    pub maximize: bool,
    /// Objective value at the known optimum, when one exists.
    pub known_optimum: Option<f64>,
    /// Optional per-problem override of the score clip range.
    pub score_clip: Option<(f64, f64)>,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.dim == 0 {
            return Err(CoreError::InvalidSpec("dim must be >= 1".into()));
        }
        if self.lower.len() != self.dim || self.upper.len() != self.dim {
            return Err(CoreError::InvalidSpec(format!(
                "bounds length {}/{} != dim {}",
                self.lower.len(),
                self.upper.len(),
                self.dim
            )));
        }
        for i in 0..self.dim {
            if !(self.lower[i] < self.upper[i]) {
                return Err(CoreError::InvalidSpec(format!(
                    "lower[{i}] = {} must be < upper[{i}] = {}",
                    self.lower[i], self.upper[i]
                )));
            }
        }
        if let Some((lo, hi)) = self.score_clip {
            if !(lo > 0.0 && lo < hi) {
                return Err(CoreError::InvalidClipRange { lo, hi });
            }
        }
        Ok(())
    }

    /// Clamps a point into the box, component by component.
    pub fn clip(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| v.clamp(self.lower[i], self.upper[i]))
            .collect()
    }
}

type Objective = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A problem spec bundled with its (minimizing) objective.
#[derive(Clone)]
pub struct Problem {
    spec: ProblemSpec,
    objective: Arc<Objective>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem").field("spec", &self.spec).finish_non_exhaustive()
    }
}

impl Problem {
    /// Wraps a minimizing objective. Callers converting a maximization task
    /// must do so inside `objective` and set `spec.maximize`.
    pub fn new<F>(spec: ProblemSpec, objective: F) -> Result<Self, CoreError>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        spec.validate()?;
        Ok(Self { spec, objective: Arc::new(objective) })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// Raw objective call without budget accounting. The point is still
    /// clipped to the box. Prefer [`BudgetedEvaluator::evaluate`] anywhere
    /// evaluations must be counted.
    pub fn eval_unbudgeted(&self, x: &[f64]) -> f64 {
        (self.objective)(&self.spec.clip(x))
    }
}

/// Whether an evaluation hit a cheap stand-in or the real target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalKind {
    Proxy,
    Target,
}

/// Pipeline phase an evaluation is charged to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Generation,
    Discovery,
    Validation,
}

/// Evaluation counts for one phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCount {
    pub proxy_evals: u64,
    pub target_evals: u64,
}

/// Separates cheap proxy evaluations from real target evaluations, broken
/// down by pipeline phase. The budget-decoupling claim of the whole pipeline
/// is audited from this ledger.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub generation: PhaseCount,
    pub discovery: PhaseCount,
    pub validation: PhaseCount,
}

impl BudgetLedger {
    pub fn record(&mut self, phase: Phase, kind: EvalKind, n: u64) {
        let slot = match phase {
            Phase::Generation => &mut self.generation,
            Phase::Discovery => &mut self.discovery,
            Phase::Validation => &mut self.validation,
        };
        match kind {
            EvalKind::Proxy => slot.proxy_evals += n,
            EvalKind::Target => slot.target_evals += n,
        }
    }

    pub fn proxy_total(&self) -> u64 {
        self.generation.proxy_evals + self.discovery.proxy_evals + self.validation.proxy_evals
    }

    pub fn target_total(&self) -> u64 {
        self.generation.target_evals + self.discovery.target_evals + self.validation.target_evals
    }

    pub fn merge(&mut self, other: &BudgetLedger) {
        for (a, b) in [
            (&mut self.generation, &other.generation),
            (&mut self.discovery, &other.discovery),
            (&mut self.validation, &other.validation),
        ] {
            a.proxy_evals += b.proxy_evals;
            a.target_evals += b.target_evals;
        }
    }
}

/// One trace row: evaluation index (1-based), raw value, best so far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub index: u64,
    pub raw: f64,
    pub best: f64,
}

/// Wraps a problem with a hard evaluation budget and a convergence trace.
///
/// Every call clips the point into the box, so algorithms may hand in
/// slightly infeasible iterates; the trace always reflects feasible queries.
#[derive(Debug, Clone)]
pub struct BudgetedEvaluator {
    problem: Problem,
    budget: u64,
    used: u64,
    kind: EvalKind,
    phase: Phase,
    trace: Vec<TraceEntry>,
    best: f64,
    best_x: Option<Vec<f64>>,
}

impl BudgetedEvaluator {
    pub fn new(problem: Problem, budget: u64, kind: EvalKind, phase: Phase) -> Result<Self, CoreError> {
        if budget == 0 {
            return Err(CoreError::ZeroBudget);
        }
        Ok(Self {
            problem,
            budget,
            used: 0,
            kind,
            phase,
            trace: Vec::new(),
            best: f64::INFINITY,
            best_x: None,
        })
    }

    /// Evaluates one point. Fails with `BudgetExhausted` once `used == budget`
    /// (the failing call consumes nothing) and with `DimensionMismatch` before
    /// any budget is spent.
    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64, CoreError> {
        let dim = self.problem.dim();
        if x.len() != dim {
            return Err(CoreError::DimensionMismatch { expected: dim, got: x.len() });
        }
        if self.used >= self.budget {
            return Err(CoreError::BudgetExhausted { budget: self.budget });
        }
        let clipped = self.problem.spec().clip(x);
        let raw = (self.problem.objective)(&clipped);
        self.used += 1;
        // NaN never becomes the incumbent; the trace still records the call.
        if !raw.is_nan() && raw < self.best {
            self.best = raw;
            self.best_x = Some(clipped);
        }
        self.trace.push(TraceEntry { index: self.used, raw, best: self.best });
        Ok(raw)
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.used
    }

    pub fn is_exhausted(&self) -> bool {
        self.used >= self.budget
    }

    pub fn kind(&self) -> EvalKind {
        self.kind
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_x(&self) -> Option<&[f64]> {
        self.best_x.as_deref()
    }

    /// Ledger contribution of this evaluator's consumption so far.
    pub fn ledger(&self) -> BudgetLedger {
        let mut ledger = BudgetLedger::default();
        ledger.record(self.phase, self.kind, self.used);
        ledger
    }
}

/// The persistence unit for a single optimization run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: String,
    /// Short human label for report aggregation ("rs-baseline", "champion-1", ...).
    pub label: String,
    pub config: AlgorithmConfig,
    pub seed: u64,
    pub budget: u64,
    pub ledger: BudgetLedger,
    /// Rows of `[evaluation_index, raw, best_so_far]`.
    pub trace: Vec<(u64, f64, f64)>,
    pub aocc: f64,
    pub best_value: f64,
    pub best_x: Vec<f64>,
}

impl RunRecord {
    /// Convergence trace as CSV with header `eval,raw,best`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("eval,raw,best\n");
        for (t, raw, best) in &self.trace {
            out.push_str(&format!("{t},{raw:?},{best:?}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(dim: usize) -> Problem {
        Problem::new(
            ProblemSpec {
                name: "sphere-test".into(),
                dim,
                lower: vec![-5.0; dim],
                upper: vec![5.0; dim],
                maximize: false,
                known_optimum: Some(0.0),
                score_clip: None,
            },
            |x| x.iter().map(|v| v * v).sum(),
        )
        .unwrap()
    }

    #[test]
    fn evaluates_at_origin() {
        let mut ev = BudgetedEvaluator::new(sphere(2), 10, EvalKind::Target, Phase::Validation).unwrap();
        assert_eq!(ev.evaluate(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(ev.used(), 1);
    }

    #[test]
    fn budget_hard_stop_does_not_consume() {
        let mut ev = BudgetedEvaluator::new(sphere(2), 1, EvalKind::Target, Phase::Validation).unwrap();
        ev.evaluate(&[1.0, 1.0]).unwrap();
        match ev.evaluate(&[0.0, 0.0]) {
            Err(CoreError::BudgetExhausted { budget: 1 }) => {}
            other => panic!("expected BudgetExhausted, got {other:?}"),
        }
        assert_eq!(ev.used(), 1);
        assert_eq!(ev.trace().len(), 1);
    }

    #[test]
    fn dimension_mismatch_costs_nothing() {
        let mut ev = BudgetedEvaluator::new(sphere(2), 5, EvalKind::Target, Phase::Validation).unwrap();
        assert!(matches!(
            ev.evaluate(&[1.0]),
            Err(CoreError::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert_eq!(ev.used(), 0);
    }

    #[test]
    fn points_clip_to_bounds_before_evaluation() {
        let mut ev = BudgetedEvaluator::new(sphere(1), 5, EvalKind::Target, Phase::Validation).unwrap();
        let y = ev.evaluate(&[100.0]).unwrap();
        assert_eq!(y, 25.0); // clipped to upper bound 5
        assert_eq!(ev.best_x().unwrap(), &[5.0]);
    }

    #[test]
    fn best_so_far_is_monotone() {
        let mut ev = BudgetedEvaluator::new(sphere(1), 8, EvalKind::Target, Phase::Validation).unwrap();
        for x in [3.0, -4.0, 1.0, 2.0, 0.5, -0.25, 4.0, 0.1] {
            ev.evaluate(&[x]).unwrap();
        }
        let bests: Vec<f64> = ev.trace().iter().map(|e| e.best).collect();
        for w in bests.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert_eq!(ev.best(), 0.010000000000000002); // 0.1^2 in floating point
    }

    #[test]
    fn invalid_spec_rejected() {
        let bad = ProblemSpec {
            name: "bad".into(),
            dim: 2,
            lower: vec![0.0, 1.0],
            upper: vec![1.0, 1.0],
            maximize: false,
            known_optimum: None,
            score_clip: None,
        };
        assert!(Problem::new(bad, |_| 0.0).is_err());
    }

    #[test]
    fn ledger_separates_kinds_and_phases() {
        let mut ledger = BudgetLedger::default();
        ledger.record(Phase::Discovery, EvalKind::Proxy, 450);
        ledger.record(Phase::Validation, EvalKind::Target, 500);
        ledger.record(Phase::Generation, EvalKind::Target, 750);
        assert_eq!(ledger.proxy_total(), 450);
        assert_eq!(ledger.target_total(), 1250);
        assert_eq!(ledger.discovery.target_evals, 0);

        let mut other = BudgetLedger::default();
        other.record(Phase::Discovery, EvalKind::Proxy, 50);
        ledger.merge(&other);
        assert_eq!(ledger.discovery.proxy_evals, 500);
    }

    #[test]
    fn trace_csv_has_pinned_header() {
        let rec = RunRecord {
            problem: "p".into(),
            label: "l".into(),
            config: crate::algospace::AlgorithmConfig::default(),
            seed: 0,
            budget: 2,
            ledger: BudgetLedger::default(),
            trace: vec![(1, 3.5, 3.5), (2, 1.25, 1.25)],
            aocc: 0.5,
            best_value: 1.25,
            best_x: vec![0.0],
        };
        let csv = rec.trace_csv();
        assert!(csv.starts_with("eval,raw,best\n"));
        assert!(csv.contains("2,1.25,1.25"));
    }
}

//! The discovery loop and its scoring, selection, and validation stages.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::proposer::{
    OfflineMutator, ProposeError, Proposer, ProposerRequest, ProposerResponse, CONFIG_SCHEMA,
};
use super::{sub_seed, Condition, DesignerError, ProxySource};
use crate::algospace::{run, AlgorithmConfig};
use crate::ela::{landscape_distance, FeatureDistribution};
use crate::problem::{
    BudgetLedger, BudgetedEvaluator, EvalKind, Phase, Problem, ProblemSpec, RunRecord,
};
use crate::rng::{labeled_stream, RandomStream};

/// Knobs of one discovery session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionSettings {
    /// Proposal-evaluate-accept cycles.
    pub iterations: usize,
    /// Runs per stand-in objective per candidate score.
    pub repetitions: usize,
    /// Evaluation budget of each inner run.
    pub inner_budget: u64,
    /// Proposer attempts before the offline fallback takes the iteration.
    pub proposer_retries: u32,
}

impl SessionSettings {
    pub fn with_dim(dim: usize) -> Self {
        SessionSettings {
            iterations: 100,
            repetitions: 3,
            inner_budget: 50 * dim as u64,
            proposer_retries: 3,
        }
    }
}

/// One iteration's outcome, persisted as a JSON-lines record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub config: AlgorithmConfig,
    pub score: f64,
    pub accepted: bool,
    /// Incumbent score after this iteration.
    pub incumbent_score: f64,
    /// Which proposer produced the candidate, or which fallback fired.
    pub proposer: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rationale: Option<String>,
}

/// State of one (1+1)-ES configuration search.
#[derive(Debug, Clone)]
pub struct DiscoverySession {
    pub condition: Condition,
    pub target: ProblemSpec,
    pub proxies: Vec<ProxySource>,
    pub settings: SessionSettings,
    pub seed: u64,
    /// Tag prepended to persisted history lines.
    pub session_tag: String,
    pub incumbent: (AlgorithmConfig, f64),
    pub history: Vec<HistoryEntry>,
    pub ledger: BudgetLedger,
}

impl DiscoverySession {
    /// A fresh session starting from the default configuration. The proxies
    /// must already match the condition: generated expressions, benchmark
    /// instances, or the bare target.
    pub fn new(
        condition: Condition,
        target: ProblemSpec,
        proxies: Vec<ProxySource>,
        settings: SessionSettings,
        seed: u64,
        session_tag: impl Into<String>,
    ) -> Result<Self, DesignerError> {
        if proxies.is_empty() {
            return Err(DesignerError::InvalidInput("no stand-in objectives".into()));
        }
        if settings.iterations == 0 || settings.repetitions == 0 || settings.inner_budget == 0 {
            return Err(DesignerError::InvalidInput(
                "iterations, repetitions, and inner budget must be positive".into(),
            ));
        }
        target.validate().map_err(DesignerError::Core)?;
        Ok(DiscoverySession {
            condition,
            target,
            proxies,
            settings,
            seed,
            session_tag: session_tag.into(),
            incumbent: (AlgorithmConfig::default(), f64::NEG_INFINITY),
            history: Vec::new(),
            ledger: BudgetLedger::default(),
        })
    }

    /// Inner runs are charged as real-target evaluations only when the
    /// search runs directly against the target.
    pub fn eval_kind(&self) -> EvalKind {
        match self.condition {
            Condition::RealWorldDirect => EvalKind::Target,
            _ => EvalKind::Proxy,
        }
    }

    /// History as JSON lines, one object per iteration, tagged with the
    /// session name.
    pub fn history_jsonl(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            session: &'a str,
            #[serde(flatten)]
            entry: &'a HistoryEntry,
        }
        let mut out = String::new();
        for entry in &self.history {
            let line = Line { session: &self.session_tag, entry };
            out.push_str(&serde_json::to_string(&line).expect("history serializes"));
            out.push('\n');
        }
        out
    }
}

/// Ranks a pool of landscapes by distance to the target's and returns the
/// `k` closest names, ties broken by name.
pub fn select_proxies(
    target_dist: &FeatureDistribution,
    pool: &[(String, FeatureDistribution)],
    k: usize,
) -> Result<Vec<String>, DesignerError> {
    if pool.is_empty() {
        return Err(DesignerError::InvalidInput("empty candidate pool".into()));
    }
    let mut ranked: Vec<(f64, &str)> = pool
        .iter()
        .map(|(name, dist)| Ok((landscape_distance(target_dist, dist)?, name.as_str())))
        .collect::<Result<_, DesignerError>>()?;
    ranked.sort_by(|(da, na), (db, nb)| {
        da.partial_cmp(db).expect("distances are finite").then_with(|| na.cmp(nb))
    });
    Ok(ranked.into_iter().take(k).map(|(_, name)| name.to_owned()).collect())
}

/// Scores one configuration: mean final AOCC over every stand-in objective
/// times `repetitions` seeded runs. Seeds depend only on the session seed
/// and the (objective, repetition) slot, so every candidate in a session is
/// scored on common random numbers. Consumption lands in `ledger`.
#[allow(clippy::too_many_arguments)]
pub fn score_candidate(
    config: &AlgorithmConfig,
    proxies: &[ProxySource],
    inner_budget: u64,
    repetitions: usize,
    kind: EvalKind,
    base_seed: u64,
    ledger: &mut BudgetLedger,
) -> Result<f64, DesignerError> {
    if proxies.is_empty() {
        return Err(DesignerError::InvalidInput("no stand-in objectives".into()));
    }
    let slots: Vec<(usize, usize)> = (0..proxies.len())
        .flat_map(|p| (0..repetitions).map(move |r| (p, r)))
        .collect();
    let records: Vec<RunRecord> = slots
        .par_iter()
        .map(|&(p, r)| {
            let run_seed = sub_seed(base_seed, "score-run", (p * repetitions + r) as u64);
            let problem = proxies[p].instantiate(run_seed)?;
            let evaluator =
                BudgetedEvaluator::new(problem, inner_budget, kind, Phase::Discovery)?;
            run(config, evaluator, run_seed).map_err(DesignerError::from)
        })
        .collect::<Result<_, _>>()?;
    let mut total = 0.0;
    for record in &records {
        ledger.merge(&record.ledger);
        total += record.aocc;
    }
    Ok(total / records.len() as f64)
}

/// Builds the proposer's view of the session.
fn build_request<'a>(session: &'a DiscoverySession, history_window: &'a [HistoryEntry]) -> ProposerRequest<'a> {
    let task_description = format!(
        "Propose the next configuration of a continuous black-box optimizer. \
         The objective is minimized inside a box of dimension {dim}, with a \
         budget of {budget} evaluations per run. Candidates are scored by the \
         mean area over the clipped log-convergence curve (higher is better) \
         across {n} training objective(s) similar to the deployment problem; \
         the deployment problem itself is not evaluated during this search. \
         Reply with one JSON object matching the schema, optionally wrapped \
         as {{\"config\": ..., \"rationale\": ...}}.",
        dim = session.target.dim,
        budget = session.settings.inner_budget,
        n = session.proxies.len(),
    );
    ProposerRequest {
        task_description,
        incumbent_config: &session.incumbent.0,
        incumbent_score: session.incumbent.1,
        recent_history: history_window,
        schema: CONFIG_SCHEMA,
    }
}

/// Result of asking the proposer, after retries and fallback.
fn propose_with_fallback(
    proposer: &mut dyn Proposer,
    session: &DiscoverySession,
    rng: &mut RandomStream,
) -> (ProposerResponse, String) {
    let window_start = session.history.len().saturating_sub(5);
    let window = &session.history[window_start..];
    let request = build_request(session, window);
    let mut last_error: Option<ProposeError> = None;
    for _ in 0..session.settings.proposer_retries.max(1) {
        match proposer.propose(&request, rng) {
            Ok(resp) => match resp.config.validate() {
                Ok(()) => return (resp, proposer.name().to_owned()),
                Err(e) => last_error = Some(ProposeError::Malformed(e.to_string())),
            },
            Err(e) => last_error = Some(e),
        }
    }
    let reason = match last_error {
        Some(ProposeError::Unavailable(_)) => "fallback:unavailable",
        Some(ProposeError::Malformed(_)) => "fallback:malformed",
        None => "fallback:unavailable",
    };
    let response = OfflineMutator
        .propose(&request, rng)
        .expect("offline mutation cannot fail");
    (response, reason.to_owned())
}

/// Runs the (1+1)-ES: score the starting configuration, then for each
/// iteration ask the proposer (falling back to an offline mutation), score
/// the candidate, and accept on a tie or an improvement. Returns the final
/// incumbent; the per-iteration record stays on the session.
pub fn discover(
    session: &mut DiscoverySession,
    proposer: &mut dyn Proposer,
) -> Result<(AlgorithmConfig, f64), DesignerError> {
    if !session.history.is_empty() {
        return Err(DesignerError::SessionNotFresh);
    }
    let mut rng = labeled_stream(session.seed, "designer", 0);
    let kind = session.eval_kind();

    let initial_score = score_candidate(
        &session.incumbent.0,
        &session.proxies,
        session.settings.inner_budget,
        session.settings.repetitions,
        kind,
        session.seed,
        &mut session.ledger,
    )?;
    session.incumbent.1 = initial_score;
    session.history.push(HistoryEntry {
        iteration: 0,
        config: session.incumbent.0.clone(),
        score: initial_score,
        accepted: true,
        incumbent_score: initial_score,
        proposer: "initial".into(),
        rationale: None,
    });

    for iteration in 1..=session.settings.iterations {
        let (response, proposer_tag) = propose_with_fallback(proposer, session, &mut rng);
        let score = score_candidate(
            &response.config,
            &session.proxies,
            session.settings.inner_budget,
            session.settings.repetitions,
            kind,
            session.seed,
            &mut session.ledger,
        )?;
        let accepted = score >= session.incumbent.1;
        if accepted {
            session.incumbent = (response.config.clone(), score);
        }
        session.history.push(HistoryEntry {
            iteration,
            config: response.config,
            score,
            accepted,
            incumbent_score: session.incumbent.1,
            proposer: proposer_tag,
            rationale: if response.rationale.is_empty() {
                None
            } else {
                Some(response.rationale)
            },
        });
    }
    Ok(session.incumbent.clone())
}

/// The incumbent plus the best two structurally distinct configurations
/// from the history, at most three in total.
pub fn champion_set(session: &DiscoverySession) -> Vec<AlgorithmConfig> {
    champion_set_from(std::slice::from_ref(&session.incumbent), &session.history)
}

/// As [`champion_set`], but over pooled results from several sessions: the
/// best incumbent leads, followed by the best distinct history configs.
pub fn champion_set_from(
    incumbents: &[(AlgorithmConfig, f64)],
    history: &[HistoryEntry],
) -> Vec<AlgorithmConfig> {
    let best = incumbents
        .iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).expect("scores are finite"))
        .expect("at least one incumbent");
    let mut champions = vec![best.0.clone()];
    let mut ranked: Vec<&HistoryEntry> = history.iter().collect();
    ranked.sort_by(|a, b| {
        b.score.partial_cmp(&a.score).expect("scores are finite").then(a.iteration.cmp(&b.iteration))
    });
    for entry in ranked {
        if champions.len() >= 3 {
            break;
        }
        if champions.iter().all(|c| *c != entry.config) {
            champions.push(entry.config.clone());
        }
    }
    champions
}

/// One champion's validation outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChampionReport {
    pub label: String,
    pub config: AlgorithmConfig,
    /// Final score of each seeded run.
    pub aocc: Vec<f64>,
    pub best_values: Vec<f64>,
    /// Best point of each run, for inspection of the actual solutions.
    pub best_points: Vec<Vec<f64>>,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
}

/// Validation of the discovery phase: seeded repetitions of every champion
/// on the real target, plus the consumption audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub champions: Vec<ChampionReport>,
    /// Session consumption plus validation consumption.
    pub ledger: BudgetLedger,
    /// What a direct search on the target would have cost.
    pub hypothetical_target_evals: u64,
    pub actual_target_evals: u64,
    /// Cost-reduction ratio: hypothetical over actual.
    pub h2_ratio: f64,
}

/// Runs each champion `runs` times on the real target at `budget`
/// evaluations per run and audits total consumption against the
/// direct-search hypothetical.
pub fn validate(
    champions: &[AlgorithmConfig],
    target: &Problem,
    budget: u64,
    runs: usize,
    session: &DiscoverySession,
    seed: u64,
) -> Result<ValidationReport, DesignerError> {
    validate_audited(champions, target, budget, runs, &session.settings, session.ledger, seed)
}

/// As [`validate`], but from persisted session state instead of a live
/// [`DiscoverySession`]: the settings drive the direct-search hypothetical
/// and `prior_ledger` carries what discovery already consumed.
pub fn validate_audited(
    champions: &[AlgorithmConfig],
    target: &Problem,
    budget: u64,
    runs: usize,
    settings: &SessionSettings,
    prior_ledger: BudgetLedger,
    seed: u64,
) -> Result<ValidationReport, DesignerError> {
    if champions.is_empty() {
        return Err(DesignerError::InvalidInput("no champions to validate".into()));
    }
    if runs == 0 || budget == 0 {
        return Err(DesignerError::InvalidInput("runs and budget must be positive".into()));
    }
    let mut ledger = prior_ledger;
    let mut reports = Vec::with_capacity(champions.len());
    for (c, config) in champions.iter().enumerate() {
        let records: Vec<RunRecord> = (0..runs)
            .into_par_iter()
            .map(|r| {
                let run_seed = sub_seed(seed, "validate-run", (c * runs + r) as u64);
                let evaluator = BudgetedEvaluator::new(
                    target.clone(),
                    budget,
                    EvalKind::Target,
                    Phase::Validation,
                )?;
                let mut record = run(config, evaluator, run_seed)?;
                record.label = format!("champion-{}", c + 1);
                Ok::<_, DesignerError>(record)
            })
            .collect::<Result<_, _>>()?;
        for record in &records {
            ledger.merge(&record.ledger);
        }
        reports.push(ChampionReport {
            label: format!("champion-{}", c + 1),
            config: config.clone(),
            aocc: records.iter().map(|r| r.aocc).collect(),
            best_values: records.iter().map(|r| r.best_value).collect(),
            best_points: records.iter().map(|r| r.best_x.clone()).collect(),
            records,
        });
    }
    let hypothetical =
        (settings.iterations as u64) * (settings.repetitions as u64) * settings.inner_budget;
    let actual = ledger.target_total();
    let h2 = if actual == 0 { f64::INFINITY } else { hypothetical as f64 / actual as f64 };
    Ok(ValidationReport {
        champions: reports,
        ledger,
        hypothetical_target_evals: hypothetical,
        actual_target_evals: actual,
        h2_ratio: h2,
    })
}

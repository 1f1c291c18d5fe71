//! `proxyforge discover`: run the configuration search. The condition picks
//! the stand-in objectives: evolved expressions, nearest benchmark
//! functions, or the bare target. Multiple independent sessions run from
//! derived seeds and the champion set is drawn across all of them.

use std::str::FromStr;

use proxyforge::algospace::AlgorithmConfig;
use proxyforge::designer::{
    champion_set_from, discover, select_proxies, sub_seed, Condition, DiscoverySession,
    HistoryEntry, LlmProposer, LlmSettings, OfflineMutator, Proposer, ProxySource,
    SessionSettings,
};
use proxyforge::gpgen::ExpressionTree;
use proxyforge::problems::synthetic_pool;
use proxyforge::{BudgetLedger, Problem, ProblemSpec};
use serde::{Deserialize, Serialize};

use super::ela::ElaArtifact;
use super::gen_proxies::ProxiesArtifact;
use super::resolve_problem;
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::store::RunDir;

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionSummary {
    pub tag: String,
    pub seed: u64,
    pub score: f64,
    pub config: AlgorithmConfig,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ChampionArtifact {
    pub condition: Condition,
    pub problem: String,
    /// Best incumbent across every session.
    pub champion: AlgorithmConfig,
    pub score: f64,
    /// Champion plus runners-up, for validation.
    pub champions: Vec<AlgorithmConfig>,
    pub per_session: Vec<SessionSummary>,
    /// Per-session settings; the sweep cost is `sessions` times this.
    pub settings: SessionSettings,
    pub sessions: usize,
    /// Names of the stand-in objectives the search ran against.
    pub proxy_names: Vec<String>,
    pub ledger: BudgetLedger,
}

/// Box copy of the target for evolved expressions to live on.
fn proxy_spec(target: &ProblemSpec, rank: usize) -> ProblemSpec {
    ProblemSpec {
        name: format!("proxy-{rank}"),
        dim: target.dim,
        lower: target.lower.clone(),
        upper: target.upper.clone(),
        maximize: false,
        known_optimum: None,
        score_clip: None,
    }
}

/// Builds the stand-in objectives for a condition from the artifacts earlier
/// commands left in the run directory.
fn build_proxies(
    condition: Condition,
    config: &PipelineConfig,
    target: &Problem,
    run: &RunDir,
) -> Result<Vec<ProxySource>, CliError> {
    match condition {
        Condition::ProxyDriven => {
            let path = run.path("proxies", "json");
            if !path.exists() {
                return Err(CliError::usage(format!(
                    "no proxy artifact for config {}; run `proxyforge gen-proxies` first",
                    run.hash()
                )));
            }
            let artifact: ProxiesArtifact = run.read_json(&path)?;
            let mut sources = Vec::with_capacity(artifact.entries.len());
            for entry in &artifact.entries {
                let tree = ExpressionTree::from_str(&entry.tree)
                    .map_err(|e| CliError::runtime(format!("stored proxy: {e}")))?;
                sources.push(ProxySource::Tree {
                    tree,
                    spec: proxy_spec(target.spec(), entry.rank),
                });
            }
            Ok(sources)
        }
        Condition::BenchmarkDriven => {
            let path = run.path("features", "json");
            if !path.exists() {
                return Err(CliError::usage(format!(
                    "no feature artifact for config {}; run `proxyforge ela` first",
                    run.hash()
                )));
            }
            let artifact: ElaArtifact = run.read_json(&path)?;
            let pool_dists: Vec<(String, _)> = artifact
                .pool
                .into_iter()
                .map(|entry| (entry.name, entry.distribution))
                .collect();
            let selected =
                select_proxies(&artifact.distribution, &pool_dists, config.gp.top_k)?;
            let exclude = super::ela::own_family(&config.problem);
            let instances = synthetic_pool(target.dim(), config.master_seed, exclude);
            let mut sources = Vec::with_capacity(selected.len());
            for name in &selected {
                let member = instances
                    .iter()
                    .find(|p| p.name() == name)
                    .ok_or_else(|| {
                        CliError::runtime(format!("pool member {name} not reconstructible"))
                    })?;
                sources.push(ProxySource::Fixed(member.clone()));
            }
            Ok(sources)
        }
        Condition::RealWorldDirect => Ok(vec![ProxySource::Fixed(target.clone())]),
    }
}

pub fn cmd_discover(config: &PipelineConfig) -> Result<(), CliError> {
    let target = resolve_problem(config)?;
    let condition = config.condition()?;
    let run = RunDir::open(config)?;
    let proxies = build_proxies(condition, config, &target, &run)?;
    run.log("discover", &format!("start ({})", condition.as_str()));

    let settings = SessionSettings {
        iterations: config.designer.iterations,
        repetitions: config.designer.repetitions,
        inner_budget: config.run_budget(target.dim()),
        proposer_retries: config.designer.proposer_retries,
    };
    let mut proposer = make_proposer(config)?;

    let mut incumbents: Vec<(AlgorithmConfig, f64)> = Vec::new();
    let mut all_history: Vec<HistoryEntry> = Vec::new();
    let mut per_session = Vec::new();
    let mut history_jsonl = String::new();
    let mut ledger = BudgetLedger::default();
    for s in 0..config.designer.sessions {
        let seed = sub_seed(config.master_seed, "session", s as u64);
        let tag = format!("session-{}", s + 1);
        let mut session = DiscoverySession::new(
            condition,
            target.spec().clone(),
            proxies.clone(),
            settings.clone(),
            seed,
            tag.clone(),
        )?;
        let (best, score) = discover(&mut session, proposer.as_mut())?;
        history_jsonl.push_str(&session.history_jsonl());
        all_history.extend(session.history.iter().cloned());
        ledger.merge(&session.ledger);
        incumbents.push((best.clone(), score));
        per_session.push(SessionSummary { tag, seed, score, config: best });
    }

    let fallbacks = all_history
        .iter()
        .filter(|entry| entry.proposer.starts_with("fallback:"))
        .count();
    if fallbacks > 0 {
        eprintln!(
            "warning: {fallbacks} of {} iterations fell back to the offline proposer",
            all_history.len()
        );
    }

    let champions = champion_set_from(&incumbents, &all_history);
    let best_score = incumbents.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);

    let artifact = ChampionArtifact {
        condition,
        problem: config.problem.clone(),
        champion: champions[0].clone(),
        score: best_score,
        champions: champions.clone(),
        per_session,
        settings,
        sessions: config.designer.sessions,
        proxy_names: proxies.iter().map(|p| p.name()).collect(),
        ledger,
    };
    run.write_json("discover", &run.path("champion", "json"), &artifact)?;
    run.write("discover", &run.path("history", "jsonl"), history_jsonl.as_bytes())?;
    run.write_json("discover", &run.path("ledger", "json"), &ledger)?;
    run.log("discover", "done");

    println!(
        "discover ({}): {} sessions x {} iterations, champion score {:.6}, \
         {} proxy / {} target evals",
        condition.as_str(),
        config.designer.sessions,
        config.designer.iterations,
        best_score,
        ledger.proxy_total(),
        ledger.target_total(),
    );
    println!(
        "  champion: {}",
        serde_json::to_string(&artifact.champion).expect("config serializes")
    );
    Ok(())
}

fn make_proposer(config: &PipelineConfig) -> Result<Box<dyn Proposer>, CliError> {
    match config.designer.proposer.as_str() {
        "offline" => Ok(Box::new(OfflineMutator)),
        "llm" => {
            let settings = LlmSettings {
                endpoint: config.designer.endpoint.clone(),
                model: config.designer.model.clone(),
                timeout_secs: config.designer.timeout_secs,
                key_env: config.designer.key_env.clone(),
            };
            let proposer =
                LlmProposer::new(settings).map_err(|e| CliError::runtime(e.to_string()))?;
            Ok(Box::new(proposer))
        }
        other => Err(CliError::usage(format!(
            "unknown proposer '{other}' (expected offline or llm)"
        ))),
    }
}

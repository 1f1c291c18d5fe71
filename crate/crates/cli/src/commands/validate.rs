//! `proxyforge validate`: spend real evaluations on the discovered
//! champions, audit total consumption against what a direct search would
//! have cost, and optionally run the reference baselines under the same
//! budget for comparison.

use proxyforge::designer::{sub_seed, validate_audited, Condition, SessionSettings};
use proxyforge::{BudgetLedger, RunRecord};
use serde::{Deserialize, Serialize};

use super::baseline::run_baselines;
use super::discover::ChampionArtifact;
use super::{median, resolve_problem};
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::store::RunDir;

use proxyforge::algospace::AlgorithmConfig;

#[derive(Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub config: AlgorithmConfig,
    /// Final score of each seeded run.
    pub aocc: Vec<f64>,
    pub median_aocc: f64,
    pub best_values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ValidationArtifact {
    pub problem: String,
    pub condition: Condition,
    pub budget: u64,
    pub runs: usize,
    pub champions: Vec<RunSummary>,
    /// Whole-pipeline consumption including validation.
    pub ledger: BudgetLedger,
    pub hypothetical_target_evals: u64,
    pub actual_target_evals: u64,
    pub h2_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub baselines: Option<Vec<RunSummary>>,
    /// Baseline consumption, kept outside the pipeline audit.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub baseline_ledger: Option<BudgetLedger>,
}

/// Writes one run's full record and its convergence trace.
pub(crate) fn persist_record(
    run: &RunDir,
    command: &str,
    stem: &str,
    record: &RunRecord,
) -> Result<(), CliError> {
    run.write_json(command, &run.path_in("records", stem, "json"), record)?;
    run.write(
        command,
        &run.path_in("traces", stem, "csv"),
        record.trace_csv().as_bytes(),
    )?;
    Ok(())
}

pub fn cmd_validate(config: &PipelineConfig, with_baselines: bool) -> Result<(), CliError> {
    let target = resolve_problem(config)?;
    let run = RunDir::open(config)?;
    let champion_path = run.path("champion", "json");
    if !champion_path.exists() {
        return Err(CliError::usage(format!(
            "no champion artifact for config {}; run `proxyforge discover` first",
            run.hash()
        )));
    }
    let artifact: ChampionArtifact = run.read_json(&champion_path)?;
    run.log("validate", "start");

    let budget = config.run_budget(target.dim());
    let runs = config.validation.runs;
    // The audit compares against a direct search of the whole sweep, so the
    // hypothetical scales with the session count.
    let sweep_settings = SessionSettings {
        iterations: artifact.settings.iterations * artifact.sessions.max(1),
        ..artifact.settings.clone()
    };
    let seed = sub_seed(config.master_seed, "validation", 0);
    let report = validate_audited(
        &artifact.champions,
        &target,
        budget,
        runs,
        &sweep_settings,
        artifact.ledger,
        seed,
    )?;

    let mut champions = Vec::with_capacity(report.champions.len());
    for champion in &report.champions {
        for (r, record) in champion.records.iter().enumerate() {
            let stem = format!("{}-run-{:02}", champion.label, r + 1);
            persist_record(&run, "validate", &stem, record)?;
        }
        champions.push(RunSummary {
            label: champion.label.clone(),
            config: champion.config.clone(),
            aocc: champion.aocc.clone(),
            median_aocc: median(&champion.aocc),
            best_values: champion.best_values.clone(),
        });
    }

    let (baselines, baseline_ledger) = if with_baselines {
        let (summaries, record_sets, ledger) =
            run_baselines(&target, budget, runs, config.master_seed)?;
        for (summary, records) in summaries.iter().zip(&record_sets) {
            for (r, record) in records.iter().enumerate() {
                let stem = format!("{}-run-{:02}", summary.label, r + 1);
                persist_record(&run, "validate", &stem, record)?;
            }
        }
        (Some(summaries), Some(ledger))
    } else {
        (None, None)
    };

    let out = ValidationArtifact {
        problem: config.problem.clone(),
        condition: artifact.condition,
        budget,
        runs,
        champions,
        ledger: report.ledger,
        hypothetical_target_evals: report.hypothetical_target_evals,
        actual_target_evals: report.actual_target_evals,
        h2_ratio: report.h2_ratio,
        baselines,
        baseline_ledger,
    };
    run.write_json("validate", &run.path("validation", "json"), &out)?;
    run.log("validate", "done");

    println!(
        "validate: {} champions x {} runs at budget {}, H2 {:.2} ({} actual vs {} hypothetical target evals)",
        out.champions.len(),
        runs,
        budget,
        out.h2_ratio,
        out.actual_target_evals,
        out.hypothetical_target_evals,
    );
    for summary in &out.champions {
        println!("  {}: median score {:.6}", summary.label, summary.median_aocc);
    }
    if let Some(baselines) = &out.baselines {
        for summary in baselines {
            println!("  {}: median score {:.6}", summary.label, summary.median_aocc);
        }
    }
    Ok(())
}

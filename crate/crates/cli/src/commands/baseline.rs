//! `proxyforge baseline`: reference optimizers on the target under the
//! validation budget. Random search, canonical DE, and the
//! population-shrinking adaptive DE share seeds run for run so the
//! comparison is paired.

use proxyforge::algospace::{de_baseline, lshade_baseline, rs_baseline, run, AlgorithmConfig};
use proxyforge::designer::sub_seed;
use proxyforge::{BudgetLedger, BudgetedEvaluator, EvalKind, Phase, Problem, RunRecord};
use serde::{Deserialize, Serialize};

use super::validate::{persist_record, RunSummary};
use super::{median, resolve_problem};
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::store::RunDir;

#[derive(Debug, Serialize, Deserialize)]
pub struct BaselineArtifact {
    pub problem: String,
    pub budget: u64,
    pub runs: usize,
    pub entries: Vec<RunSummary>,
    pub ledger: BudgetLedger,
}

/// The three reference configurations at a given dimension and budget.
pub fn baseline_suite(dim: usize, budget: u64) -> Vec<(String, AlgorithmConfig)> {
    vec![
        ("rs-baseline".to_owned(), rs_baseline()),
        ("de-baseline".to_owned(), de_baseline(dim, budget)),
        ("lshade-baseline".to_owned(), lshade_baseline(dim, budget)),
    ]
}

/// Runs every baseline `runs` times on the target. Seeds pair across
/// baselines: run r of each baseline shares a seed, so differences are down
/// to the algorithm, not the draw.
pub fn run_baselines(
    target: &Problem,
    budget: u64,
    runs: usize,
    master_seed: u64,
) -> Result<(Vec<RunSummary>, Vec<Vec<RunRecord>>, BudgetLedger), CliError> {
    let mut summaries = Vec::new();
    let mut record_sets = Vec::new();
    let mut ledger = BudgetLedger::default();
    for (label, config) in baseline_suite(target.dim(), budget) {
        let mut records = Vec::with_capacity(runs);
        for r in 0..runs {
            let evaluator = BudgetedEvaluator::new(
                target.clone(),
                budget,
                EvalKind::Target,
                Phase::Validation,
            )?;
            let seed = sub_seed(master_seed, "baseline-run", r as u64);
            let mut record = run(&config, evaluator, seed)?;
            record.label = label.clone();
            ledger.merge(&record.ledger);
            records.push(record);
        }
        summaries.push(RunSummary {
            label,
            config,
            aocc: records.iter().map(|rec| rec.aocc).collect(),
            median_aocc: median(&records.iter().map(|rec| rec.aocc).collect::<Vec<_>>()),
            best_values: records.iter().map(|rec| rec.best_value).collect(),
        });
        record_sets.push(records);
    }
    Ok((summaries, record_sets, ledger))
}

pub fn cmd_baseline(config: &PipelineConfig) -> Result<(), CliError> {
    let target = resolve_problem(config)?;
    let run = RunDir::open(config)?;
    run.log("baseline", "start");

    let budget = config.run_budget(target.dim());
    let runs = config.validation.runs;
    let (entries, record_sets, ledger) =
        run_baselines(&target, budget, runs, config.master_seed)?;
    for (summary, records) in entries.iter().zip(&record_sets) {
        for (r, record) in records.iter().enumerate() {
            let stem = format!("{}-run-{:02}", summary.label, r + 1);
            persist_record(&run, "baseline", &stem, record)?;
        }
    }

    let artifact = BaselineArtifact {
        problem: config.problem.clone(),
        budget,
        runs,
        entries,
        ledger,
    };
    run.write_json("baseline", &run.path("baselines", "json"), &artifact)?;
    run.log("baseline", "done");

    println!(
        "baseline: {} configurations x {} runs at budget {} on {}",
        artifact.entries.len(),
        runs,
        budget,
        artifact.problem
    );
    for entry in &artifact.entries {
        println!("  {}: median score {:.6}", entry.label, entry.median_aocc);
    }
    Ok(())
}

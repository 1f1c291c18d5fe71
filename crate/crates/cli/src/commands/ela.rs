//! `proxyforge ela`: sample the target, build its landscape-feature
//! distribution, prune correlated features, and profile the synthetic pool
//! on the surviving features. This is the only command that spends real
//! evaluations before validation.

use proxyforge::ela::{
    feature_distribution, prune_correlated, sample_design, FeatureDistribution, FeatureOptions,
    PairwiseDistances,
};
use proxyforge::problems::{synthetic_pool, SyntheticId};
use proxyforge::rng::labeled_stream;
use proxyforge::{BudgetLedger, BudgetedEvaluator, EvalKind, Phase, Problem, ProblemSpec};
use serde::{Deserialize, Serialize};

use super::{design_digest, resolve_problem};
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::store::RunDir;

/// Everything downstream commands need from the sampling phase.
#[derive(Debug, Serialize, Deserialize)]
pub struct ElaArtifact {
    pub problem: String,
    pub spec: ProblemSpec,
    pub sample_coef: usize,
    /// Master seed; the design stream and subsampler both derive from it.
    pub design_seed: u64,
    /// Digest over the design matrix bit patterns. `gen-proxies` rebuilds
    /// the matrix from the seed and refuses to run on a mismatch.
    pub design_digest: String,
    pub ledger: BudgetLedger,
    /// Target distribution, pruned to the retained feature set.
    pub distribution: FeatureDistribution,
    /// Synthetic comparison pool, profiled on the retained features only.
    pub pool: Vec<PoolEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PoolEntry {
    pub name: String,
    pub distribution: FeatureDistribution,
}

/// The target's own synthetic family, when it has one. Excluded from the
/// comparison pool so a synthetic target cannot be compared to itself.
pub(crate) fn own_family(name: &str) -> Option<SyntheticId> {
    let rest = name.strip_prefix("synthetic:")?;
    rest.split(':').next()?.parse().ok()
}

pub fn cmd_ela(config: &PipelineConfig) -> Result<(), CliError> {
    let problem = resolve_problem(config)?;
    let run = RunDir::open(config)?;
    run.log("ela", "start");

    let dim = problem.dim();
    let budget = (config.ela.coef * dim) as u64;
    let mut evaluator =
        BudgetedEvaluator::new(problem.clone(), budget, EvalKind::Target, Phase::Generation)?;
    let mut design_rng = labeled_stream(config.master_seed, "ela-design", 0);
    let design = sample_design(&mut evaluator, config.ela.coef, &mut design_rng)?;
    let mut ledger = evaluator.ledger();

    let distances = PairwiseDistances::compute(&design.x);
    let opts = FeatureOptions::default();
    let params = config.distribution_params();
    let mut distribution = feature_distribution(
        &design,
        Some(&distances),
        &opts,
        &params,
        None,
        config.master_seed,
    )?;
    let retained = prune_correlated(&[&distribution], config.ela.threshold_corr)?;
    distribution.features.retain(|name, _| retained.contains(name));
    distribution.retained = retained.clone();

    let exclude = own_family(&config.problem);
    let pool_problems = synthetic_pool(dim, config.master_seed, exclude);
    let mut pool = Vec::with_capacity(pool_problems.len());
    for (i, member) in pool_problems.into_iter().enumerate() {
        let entry = profile_pool_member(&member, i, config, &retained, &mut ledger)?;
        pool.push(entry);
    }

    let artifact = ElaArtifact {
        problem: config.problem.clone(),
        spec: problem.spec().clone(),
        sample_coef: config.ela.coef,
        design_seed: config.master_seed,
        design_digest: design_digest(&design.x),
        ledger,
        distribution,
        pool,
    };
    let path = run.path("features", "json");
    run.write_json("ela", &path, &artifact)?;
    run.log("ela", "done");

    println!(
        "ela: {} features retained of {}, {} target evals, {} pool members -> {}",
        retained.len(),
        proxyforge::ela::FEATURE_NAMES.len(),
        ledger.target_total(),
        artifact.pool.len(),
        path.display()
    );
    Ok(())
}

/// Samples one synthetic pool member with its own design stream and builds
/// its distribution on the target's retained features.
fn profile_pool_member(
    member: &Problem,
    index: usize,
    config: &PipelineConfig,
    retained: &[String],
    ledger: &mut BudgetLedger,
) -> Result<PoolEntry, CliError> {
    let budget = (config.ela.coef * member.dim()) as u64;
    let mut evaluator =
        BudgetedEvaluator::new(member.clone(), budget, EvalKind::Proxy, Phase::Generation)?;
    let mut rng = labeled_stream(config.master_seed, "pool-design", index as u64);
    let design = sample_design(&mut evaluator, config.ela.coef, &mut rng)?;
    ledger.merge(&evaluator.ledger());
    let distances = PairwiseDistances::compute(&design.x);
    let wanted: Vec<String> = retained.to_vec();
    let distribution = feature_distribution(
        &design,
        Some(&distances),
        &FeatureOptions::default(),
        &config.distribution_params(),
        Some(&wanted),
        config.master_seed,
    )?;
    Ok(PoolEntry { name: member.name().to_owned(), distribution })
}

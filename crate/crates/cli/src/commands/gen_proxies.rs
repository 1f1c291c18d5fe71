//! `proxyforge gen-proxies`: evolve closed-form stand-in objectives whose
//! feature distributions sit close to the target's. Costs no target
//! evaluations; the design matrix is rebuilt from the recorded seed and
//! checked against the stored digest before any cached distribution is
//! trusted.

use proxyforge::designer::sub_seed;
use proxyforge::ela::{latin_hypercube, FeatureOptions, PairwiseDistances};
use proxyforge::gpgen::{evolve, proxy_fitness, FitnessEnv};
use proxyforge::rng::labeled_stream;
use serde::{Deserialize, Serialize};

use super::{design_digest, ela::ElaArtifact};
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::store::{csv_lines, RunDir};

#[derive(Debug, Serialize, Deserialize)]
pub struct ProxyEntry {
    /// 1-based rank by fitness.
    pub rank: usize,
    /// Expression text; parses back to the tree.
    pub tree: String,
    /// Landscape distance to the target during evolution.
    pub fitness: f64,
    /// Random stream that scored it, for bit-exact replay.
    pub fitness_stream: u64,
    /// Re-scored distance under fresh random draws.
    pub verify_distance: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProxiesArtifact {
    pub problem: String,
    pub gp_seed: u64,
    pub entries: Vec<ProxyEntry>,
    pub best_by_generation: Vec<f64>,
}

pub fn cmd_gen_proxies(config: &PipelineConfig) -> Result<(), CliError> {
    let run = RunDir::open(config)?;
    let features_path = run.path("features", "json");
    if !features_path.exists() {
        return Err(CliError::usage(format!(
            "no feature artifact for config {}; run `proxyforge ela` first",
            run.hash()
        )));
    }
    let artifact: ElaArtifact = run.read_json(&features_path)?;
    run.log("gen-proxies", "start");

    let n = artifact.sample_coef * artifact.spec.dim;
    let mut design_rng = labeled_stream(artifact.design_seed, "ela-design", 0);
    let x = latin_hypercube(n, &artifact.spec.lower, &artifact.spec.upper, &mut design_rng);
    if design_digest(&x) != artifact.design_digest {
        return Err(CliError::runtime(format!(
            "design rebuild mismatch for config {}: the feature artifact was produced by a \
             different sampler",
            run.hash()
        )));
    }

    let report = evolve(
        &artifact.distribution,
        &x,
        &config.gp_params(),
        &config.distribution_params(),
        &FeatureOptions::default(),
        config.master_seed,
    )?;

    let top = report.top(config.gp.top_k);
    if top.is_empty() {
        return Err(CliError::runtime("no valid candidate in any generation".to_string()));
    }

    let distances = PairwiseDistances::compute(&x);
    let env = FitnessEnv {
        target: &artifact.distribution,
        design_x: &x,
        distances: &distances,
        dist_params: config.distribution_params(),
        opts: FeatureOptions::default(),
    };
    let verify_seed = sub_seed(config.master_seed, "verify", 0);
    let mut entries = Vec::with_capacity(top.len());
    for (i, candidate) in top.iter().enumerate() {
        let mut rng = labeled_stream(verify_seed, "gp-eval", i as u64);
        let (verify_distance, penalized) = proxy_fitness(&candidate.tree, &env, &mut rng)?;
        if penalized {
            return Err(CliError::runtime(format!(
                "candidate {} degenerated under fresh random draws: {}",
                i + 1,
                candidate.tree
            )));
        }
        entries.push(ProxyEntry {
            rank: i + 1,
            tree: candidate.tree.to_string(),
            fitness: candidate.fitness,
            fitness_stream: candidate.fitness_stream,
            verify_distance,
        });
    }

    let proxies = ProxiesArtifact {
        problem: artifact.problem.clone(),
        gp_seed: config.master_seed,
        entries,
        best_by_generation: report.best_by_generation.clone(),
    };
    run.write_json("gen-proxies", &run.path("proxies", "json"), &proxies)?;

    let curve = csv_lines(
        "generation,best_fitness",
        report
            .best_by_generation
            .iter()
            .enumerate()
            .map(|(g, f)| format!("{g},{f:?}")),
    );
    run.write("gen-proxies", &run.path("gp-curve", "csv"), curve.as_bytes())?;
    run.log("gen-proxies", "done");

    println!("gen-proxies: {} candidates for {}", proxies.entries.len(), proxies.problem);
    for entry in &proxies.entries {
        println!(
            "  #{} distance {:.6} (verify {:.6})  {}",
            entry.rank, entry.fitness, entry.verify_distance, entry.tree
        );
    }
    Ok(())
}

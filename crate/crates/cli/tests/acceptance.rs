//! The acceptance gate: ten end-to-end checks over the whole toolkit, from
//! the optics oracle up to the full discovery pipeline. Each test prints one
//! verdict line (visible under `--nocapture`); tolerances and runtime limits
//! are pinned in the bodies. The heavier checks are directional reproductions
//! at desk scale, so a few assert on win counts over seeds rather than on a
//! single run.

use std::fs;
use std::panic::AssertUnwindSafe;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use proxyforge::algospace::{de_baseline, lshade_baseline, rs_baseline, run, AlgorithmConfig};
use proxyforge::designer::{
    champion_set, discover, select_proxies, sub_seed, validate, validate_audited, Condition,
    DiscoverySession, LlmProposer, LlmSettings, OfflineMutator, ProposeError, Proposer,
    ProposerRequest, ProxySource, SessionSettings, StubBehavior, StubServer, CONFIG_SCHEMA,
};
use proxyforge::ela::{
    compute_features, feature_distribution, landscape_distance, latin_hypercube, prune_correlated,
    sample_design, wasserstein_1d, DesignSample, DistributionParams, FeatureDistribution,
    FeatureInput, FeatureOptions, PairwiseDistances,
};
use proxyforge::gpgen::{evolve, init_half_and_half, proxy_fitness, FitnessEnv, GpParams};
use proxyforge::problems::{problem_by_name, synthetic, synthetic_pool, LayerStack, SyntheticId};
use proxyforge::rng::labeled_stream;
use proxyforge::{BudgetedEvaluator, EvalKind, Phase, Problem, ProblemSpec};
use proxyforge_cli::commands::{cmd_discover, cmd_ela, cmd_gen_proxies, cmd_validate, median};
use proxyforge_cli::{Overrides, PipelineConfig};

/// Runs one criterion, prints its verdict line, and enforces the runtime
/// limit (seconds) when one is stated.
fn criterion(number: u8, name: &str, limit_secs: Option<u64>, body: impl FnOnce()) {
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(AssertUnwindSafe(body));
    let elapsed = start.elapsed().as_secs_f64();
    match outcome {
        Ok(()) => {
            let within = limit_secs.map_or(true, |limit| elapsed < limit as f64);
            if within {
                println!("ACCEPTANCE {number:02} ({name}): PASS in {elapsed:.1}s");
            } else {
                println!(
                    "ACCEPTANCE {number:02} ({name}): FAIL, took {elapsed:.1}s against a \
                     {}s limit",
                    limit_secs.unwrap()
                );
                panic!("criterion {number} exceeded its runtime limit");
            }
        }
        Err(cause) => {
            println!("ACCEPTANCE {number:02} ({name}): FAIL after {elapsed:.1}s");
            std::panic::resume_unwind(cause);
        }
    }
}

/// Samples a problem, builds its feature distribution, and prunes correlated
/// features, exactly as the `ela` pipeline stage does.
fn landscape_profile(
    problem: &Problem,
    coef: usize,
    design_label: &str,
    master: u64,
    kind: EvalKind,
) -> (DesignSample, FeatureDistribution) {
    let budget = (coef * problem.spec().dim) as u64;
    let mut evaluator =
        BudgetedEvaluator::new(problem.clone(), budget, kind, Phase::Generation).unwrap();
    let mut rng = labeled_stream(master, design_label, 0);
    let design = sample_design(&mut evaluator, coef, &mut rng).unwrap();
    let distances = PairwiseDistances::compute(&design.x);
    let mut dist = feature_distribution(
        &design,
        Some(&distances),
        &FeatureOptions::default(),
        &DistributionParams::default(),
        None,
        master,
    )
    .unwrap();
    let retained = prune_correlated(&[&dist], 0.9).unwrap();
    dist.features.retain(|name, _| retained.contains(name));
    dist.retained = retained;
    (design, dist)
}

/// Profiles a comparison-pool member on its own design, restricted to the
/// target's retained features and sharing the target's subsample draws.
fn member_profile(
    problem: &Problem,
    coef: usize,
    design_label: &str,
    index: u64,
    master: u64,
    wanted: &[String],
) -> FeatureDistribution {
    let budget = (coef * problem.spec().dim) as u64;
    let mut evaluator =
        BudgetedEvaluator::new(problem.clone(), budget, EvalKind::Proxy, Phase::Generation)
            .unwrap();
    let mut rng = labeled_stream(master, design_label, index);
    let sample = sample_design(&mut evaluator, coef, &mut rng).unwrap();
    feature_distribution(
        &sample,
        None,
        &FeatureOptions::default(),
        &DistributionParams::default(),
        Some(wanted),
        master,
    )
    .unwrap()
}

/// Search-space box for an evolved stand-in, mirroring the discover stage.
fn proxy_spec(rank: usize, target: &ProblemSpec) -> ProblemSpec {
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

#[test]
fn a01_bragg_mirror_reflectance_matches_the_analytic_form() {
    criterion(1, "quarter-wave mirror optics oracle", Some(1), || {
        let substrate = Complex64::new(1.5, 0.0);

        // Bare interface: R = ((1 - 1.5) / (1 + 1.5))^2 = 0.04.
        let empty = LayerStack::new(vec![], vec![], 1.0, substrate).unwrap();
        let bare = empty.reflectance(600.0).unwrap();
        assert!((bare - 0.04).abs() < 1e-12, "bare interface R {bare}");

        // Twenty alternating quarter-wave layers at the design wavelength.
        let indices: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 1.4 } else { 1.8 }).collect();
        let thicknesses: Vec<f64> = indices.iter().map(|n| 600.0 / (4.0 * n)).collect();
        let stack = LayerStack::new(thicknesses, indices.clone(), 1.0, substrate).unwrap();
        let computed = stack.reflectance(600.0).unwrap();

        // At exactly a quarter wave, each layer's characteristic matrix
        // reduces to the admittance flip Y -> n^2 / Y, applied from the
        // substrate up to the ambient.
        let mut admittance = 1.5_f64;
        for n in indices.iter().rev() {
            admittance = n * n / admittance;
        }
        let analytic = ((1.0 - admittance) / (1.0 + admittance)).powi(2);
        assert!(
            (computed - analytic).abs() < 1e-9,
            "stack R {computed} vs analytic {analytic}"
        );
        assert!(analytic > 0.9, "a 10-pair mirror must be strongly reflective");
    });
}

#[test]
fn a02_wasserstein_matches_the_sorted_matching_oracle() {
    criterion(2, "one-dimensional transport distance", Some(5), || {
        // For equal-size samples the optimal transport pairs sorted values.
        fn oracle(a: &[f64], b: &[f64]) -> f64 {
            let mut sa = a.to_vec();
            let mut sb = b.to_vec();
            sa.sort_by(f64::total_cmp);
            sb.sort_by(f64::total_cmp);
            let total: f64 = sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum();
            total / sa.len() as f64
        }

        let mut rng = labeled_stream(2026, "transport-oracle", 0);
        for round in 0..1000 {
            let n = rng.gen_range(1..=64);
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let got = wasserstein_1d(&a, &b).unwrap();
            let want = oracle(&a, &b);
            assert!(
                (got - want).abs() < 1e-12,
                "round {round}, n {n}: {got} vs oracle {want}"
            );
        }

        let sample = vec![0.3, -1.2, 4.0, 0.3];
        assert_eq!(wasserstein_1d(&sample, &sample).unwrap(), 0.0);
        assert_eq!(wasserstein_1d(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(wasserstein_1d(&[0.0, 2.0], &[1.0, 3.0]).unwrap(), 1.0);
    });
}

#[test]
fn a03_evolved_proxies_sit_closer_than_the_nearest_synthetics() {
    criterion(3, "landscape-distance separation", Some(600), || {
        let master = 303;
        let target = problem_by_name("synthetic:sphere:5", master).unwrap();
        let coef = 150;
        let (design, target_dist) =
            landscape_profile(&target, coef, "a03-design", master, EvalKind::Target);

        // Every synthetic family at the same master seed; the sphere member
        // is the target's own instance, profiled on an independent design.
        let pool = synthetic_pool(5, master, None);
        let mut pool_distances: Vec<(String, f64)> = Vec::new();
        for (i, member) in pool.iter().enumerate() {
            let dist = member_profile(
                member,
                coef,
                "a03-pool",
                i as u64,
                master,
                &target_dist.retained,
            );
            let d = landscape_distance(&target_dist, &dist).unwrap();
            pool_distances.push((member.spec().name.clone(), d));
        }

        // Two independent samples of the same function must be the closest
        // pair in the pool.
        let self_distance = pool_distances
            .iter()
            .find(|(name, _)| name.starts_with("synthetic:sphere:"))
            .unwrap()
            .1;
        for (name, d) in &pool_distances {
            if !name.starts_with("synthetic:sphere:") {
                assert!(
                    *d > self_distance,
                    "{name} at {d} undercuts the sphere self-distance {self_distance}"
                );
            }
        }

        let mut sorted: Vec<f64> = pool_distances.iter().map(|p| p.1).collect();
        sorted.sort_by(f64::total_cmp);
        let nearest_mean = sorted[..3].iter().sum::<f64>() / 3.0;

        let report = evolve(
            &target_dist,
            &design.x,
            &GpParams::default(),
            &DistributionParams::default(),
            &FeatureOptions::default(),
            master,
        )
        .unwrap();
        let top = report.top(3);
        assert_eq!(top.len(), 3, "evolution must yield three valid candidates");
        let proxy_mean = top.iter().map(|c| c.fitness).sum::<f64>() / 3.0;

        assert!(
            proxy_mean < nearest_mean,
            "evolved mean {proxy_mean} is not below the nearest-synthetics mean {nearest_mean}"
        );
    });
}

#[test]
fn a04_evolution_beats_the_initial_population_median() {
    criterion(4, "proxy evolution makes progress", Some(1800), || {
        let gp = GpParams::default();
        let params = DistributionParams::default();
        let opts = FeatureOptions::default();

        let mut cases = Vec::new();
        for id in [SyntheticId::Sphere, SyntheticId::Rastrigin] {
            for rep in 0..5u64 {
                cases.push((id, rep));
            }
        }

        let mut wins = 0;
        for (case, (id, _rep)) in cases.iter().enumerate() {
            let master = sub_seed(404, "gp-progress", case as u64);
            let target = synthetic(*id, 5, master).unwrap();
            let (design, target_dist) =
                landscape_profile(&target, 30, "a04-design", master, EvalKind::Proxy);

            let report = evolve(&target_dist, &design.x, &gp, &params, &opts, master).unwrap();

            // Independent rebuild of the initial population and its scores;
            // penalized candidates keep their penalty value in the median.
            let init = init_half_and_half(
                gp.n_pop,
                gp.min_depth,
                gp.max_depth,
                gp.include_rand,
                &mut labeled_stream(master, "gp-evolve", 0),
            )
            .unwrap();
            let distances = PairwiseDistances::compute(&design.x);
            let env = FitnessEnv {
                target: &target_dist,
                design_x: &design.x,
                distances: &distances,
                dist_params: params,
                opts: opts.clone(),
            };
            let initial_scores: Vec<f64> = init
                .iter()
                .enumerate()
                .map(|(i, tree)| {
                    proxy_fitness(tree, &env, &mut labeled_stream(master, "gp-eval", i as u64))
                        .unwrap()
                        .0
                })
                .collect();
            let first_generation_best =
                initial_scores.iter().copied().fold(f64::INFINITY, f64::min);
            assert_eq!(
                report.best_by_generation[0], first_generation_best,
                "the engine's initial generation diverged from the replay"
            );

            let final_best = report.top(1)[0].fitness;
            if final_best < median(&initial_scores) {
                wins += 1;
            }
        }
        assert!(wins >= 9, "evolution beat the initial median in only {wins}/10 runs");
    });
}

#[test]
fn a05_feature_extraction_sanity() {
    criterion(5, "landscape feature sanity", Some(60), || {
        let opts = FeatureOptions::default();
        let mut rng = labeled_stream(5, "feature-sanity", 0);

        // A mirrored sample has zero third moment, hence zero skewness.
        let x2 = latin_hypercube(40, &[-5.0, -5.0], &[5.0, 5.0], &mut rng);
        let y_mirror: Vec<f64> = (0..20)
            .flat_map(|i| {
                let v = (i + 1) as f64 * 0.37;
                [v, -v]
            })
            .collect();
        let feats =
            compute_features(&FeatureInput { x: &x2, y: &y_mirror, precomputed: None }, &opts, None)
                .unwrap();
        assert!(feats["distr.skewness"].abs() < 1e-9, "skewness {}", feats["distr.skewness"]);

        // A noiseless linear objective is explained perfectly by the linear
        // surrogate model.
        let x3 = latin_hypercube(60, &[-3.0, -3.0, -3.0], &[3.0, 3.0, 3.0], &mut rng);
        let y_linear: Vec<f64> =
            x3.iter().map(|p| 3.0 * p[0] - 2.0 * p[1] + 0.5 * p[2] + 7.0).collect();
        let feats =
            compute_features(&FeatureInput { x: &x3, y: &y_linear, precomputed: None }, &opts, None)
                .unwrap();
        let r2 = feats["metamodel.lin_r2_adj"];
        assert!((r2 - 1.0).abs() < 1e-6, "adjusted r-squared {r2}");

        // Distribution pipeline: every feature present and finite even on a
        // plateaued sample with an extreme outlier.
        let xr = latin_hypercube(60, &[-5.0, -5.0, -5.0], &[5.0, 5.0, 5.0], &mut rng);
        let y_rugged: Vec<f64> = xr
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let plateau = (3.0 * p[0]).sin().floor() + 0.01 * p[1];
                if i == 0 {
                    plateau + 1e9
                } else {
                    plateau
                }
            })
            .collect();
        let sample = DesignSample::new(xr, y_rugged).unwrap();
        let mut dist = feature_distribution(
            &sample,
            None,
            &opts,
            &DistributionParams::default(),
            None,
            55,
        )
        .unwrap();
        assert_eq!(dist.features.len(), 26, "every cataloged feature must be present");
        for (name, values) in &dist.features {
            assert!(
                values.iter().all(|v| v.is_finite()),
                "{name} carries a non-finite value after imputation: {values:?}"
            );
        }

        // Redundancy pruning: a duplicated column dies at threshold 0.9 and
        // the catalog-earlier copy survives.
        let probe = vec![0.9, 0.1, 0.5, 0.7, 0.3];
        dist.features.insert("distr.skewness".into(), probe.clone());
        dist.features.insert("distr.kurtosis".into(), probe);
        let kept = prune_correlated(&[&dist], 0.9).unwrap();
        assert!(kept.contains(&"distr.skewness".to_string()), "first duplicate must survive");
        assert!(!kept.contains(&"distr.kurtosis".to_string()), "second duplicate must be pruned");
    });
}

#[test]
fn a06_adaptive_de_beats_random_search_and_de_never_regresses() {
    criterion(6, "optimizer dominance and monotonicity", Some(120), || {
        let master = 606;
        for problem_name in ["synthetic:sphere:5", "mini-bragg"] {
            let problem = problem_by_name(problem_name, master).unwrap();
            let dim = problem.spec().dim;
            let budget = 50 * dim as u64;

            let score = |config: &AlgorithmConfig, seed: u64| {
                let evaluator = BudgetedEvaluator::new(
                    problem.clone(),
                    budget,
                    EvalKind::Target,
                    Phase::Validation,
                )
                .unwrap();
                run(config, evaluator, seed).unwrap()
            };

            let mut rs_scores = Vec::new();
            let mut lshade_scores = Vec::new();
            for r in 0..10 {
                let seed = sub_seed(master, "dominance-run", r);
                rs_scores.push(score(&rs_baseline(), seed).aocc);
                lshade_scores.push(score(&lshade_baseline(dim, budget), seed).aocc);

                let de_record = score(&de_baseline(dim, budget), seed);
                for pair in de_record.trace.windows(2) {
                    assert!(
                        pair[1].2 <= pair[0].2,
                        "{problem_name}: best-so-far rose from {} to {}",
                        pair[0].2,
                        pair[1].2
                    );
                }
            }
            assert!(
                median(&lshade_scores) > median(&rs_scores),
                "{problem_name}: adaptive DE median {} vs random search {}",
                median(&lshade_scores),
                median(&rs_scores)
            );
        }
    });
}

#[test]
fn a07_discovery_spends_no_target_budget_and_saves_tenfold() {
    criterion(7, "discovery and validation budgets decouple", Some(1200), || {
        let master = 707;
        let target = problem_by_name("mini-bragg", master).unwrap();
        let budget = 50 * target.spec().dim as u64;

        let (design, target_dist) =
            landscape_profile(&target, 50, "a07-design", master, EvalKind::Target);
        let report = evolve(
            &target_dist,
            &design.x,
            &GpParams::default(),
            &DistributionParams::default(),
            &FeatureOptions::default(),
            master,
        )
        .unwrap();
        let top = report.top(3);
        assert!(!top.is_empty(), "no valid evolved stand-ins");
        let proxies: Vec<ProxySource> = top
            .iter()
            .enumerate()
            .map(|(rank, candidate)| ProxySource::Tree {
                tree: candidate.tree.clone(),
                spec: proxy_spec(rank + 1, target.spec()),
            })
            .collect();

        let settings = SessionSettings {
            iterations: 100,
            repetitions: 3,
            inner_budget: budget,
            proposer_retries: 3,
        };
        let mut session = DiscoverySession::new(
            Condition::ProxyDriven,
            target.spec().clone(),
            proxies,
            settings,
            sub_seed(master, "session", 0),
            "decoupling-session",
        )
        .unwrap();
        discover(&mut session, &mut OfflineMutator).unwrap();

        assert_eq!(
            session.ledger.target_total(),
            0,
            "discovery must not touch the real objective"
        );

        let champions = champion_set(&session);
        assert!(!champions.is_empty() && champions.len() <= 3);
        let validation =
            validate(&champions, &target, budget, 10, &session, sub_seed(master, "validation", 0))
                .unwrap();

        assert_eq!(validation.hypothetical_target_evals, 150_000);
        assert!(
            validation.h2_ratio >= 10.0,
            "cost-reduction ratio {} below 10",
            validation.h2_ratio
        );
    });
}

#[test]
fn a08_proxy_driven_discovery_keeps_up_with_benchmark_driven() {
    // Both conditions search with the same offline proposer and are
    // validated under a shared seed; a seed counts for the proxy condition
    // on a tie. This is a directional smoke test over 10 master seeds, not
    // a significance test: the acceptance bar is 7 wins, leaving room for
    // three adverse draws.
    criterion(8, "tailored stand-ins transfer at least as well", Some(7200), || {
        let total = 10;
        let mut wins = 0;
        let mut outcomes = Vec::new();
        for s in 0..total {
            let master = sub_seed(808, "transfer-seed", s);
            let target = problem_by_name("mini-bragg", master).unwrap();
            let dim = target.spec().dim;
            let budget = 50 * dim as u64;

            let (design, target_dist) =
                landscape_profile(&target, 50, "a08-design", master, EvalKind::Target);

            // Tailored stand-ins: evolved expressions.
            let gp = GpParams { n_gen: 25, ..GpParams::default() };
            let report = evolve(
                &target_dist,
                &design.x,
                &gp,
                &DistributionParams::default(),
                &FeatureOptions::default(),
                master,
            )
            .unwrap();
            let top = report.top(3);
            assert!(!top.is_empty(), "seed {s}: no valid evolved stand-ins");
            for (rank, candidate) in top.iter().enumerate() {
                let y = proxyforge::gpgen::compile_and_evaluate(
                    &candidate.tree,
                    &design.x,
                    &mut labeled_stream(master, "a08-diag", rank as u64),
                );
                let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                eprintln!(
                    "DIAG seed {s} tree {rank}: min {lo:.3e} max {hi:.3e} fitness {:.4} tree {}",
                    candidate.fitness, candidate.tree
                );
            }
            let tree_proxies: Vec<ProxySource> = top
                .iter()
                .enumerate()
                .map(|(rank, candidate)| ProxySource::Tree {
                    tree: candidate.tree.clone(),
                    spec: proxy_spec(rank + 1, target.spec()),
                })
                .collect();

            // Generic stand-ins: the nearest synthetic functions.
            let pool = synthetic_pool(dim, master, None);
            let pool_profiles: Vec<(String, FeatureDistribution)> = pool
                .iter()
                .enumerate()
                .map(|(i, member)| {
                    let dist = member_profile(
                        member,
                        50,
                        "a08-pool",
                        i as u64,
                        master,
                        &target_dist.retained,
                    );
                    (member.spec().name.clone(), dist)
                })
                .collect();
            let picked = select_proxies(&target_dist, &pool_profiles, 3).unwrap();
            let bench_proxies: Vec<ProxySource> = picked
                .iter()
                .map(|name| {
                    let member = pool.iter().find(|p| p.spec().name == *name).unwrap();
                    ProxySource::Fixed(member.clone())
                })
                .collect();

            let shared_validation_seed = sub_seed(master, "transfer-validate", 0);
            let mut medians = Vec::new();
            for (condition, proxies, tag) in [
                (Condition::ProxyDriven, tree_proxies, "tailored"),
                (Condition::BenchmarkDriven, bench_proxies, "generic"),
            ] {
                let settings = SessionSettings {
                    iterations: 40,
                    repetitions: 3,
                    inner_budget: budget,
                    proposer_retries: 3,
                };
                let mut session = DiscoverySession::new(
                    condition,
                    target.spec().clone(),
                    proxies,
                    settings,
                    sub_seed(master, tag, 0),
                    tag,
                )
                .unwrap();
                let (champion, _) = discover(&mut session, &mut OfflineMutator).unwrap();
                let validation = validate_audited(
                    &[champion],
                    &target,
                    budget,
                    5,
                    &session.settings,
                    session.ledger,
                    shared_validation_seed,
                )
                .unwrap();
                medians.push(median(&validation.champions[0].aocc));
            }

            if medians[0] >= medians[1] {
                wins += 1;
            }
            outcomes.push((medians[0], medians[1]));
        }
        assert!(
            wins >= 7,
            "tailored stand-ins won only {wins}/{total}: {outcomes:?}"
        );
    });
}

#[test]
fn a09_pipeline_commands_are_byte_stable() {
    criterion(9, "reruns reproduce artifacts byte for byte", None, || {
        const CONFIG: &str = "\
problem = \"synthetic:sphere:2\"
master_seed = 11
budget_coef = 25

[ela]
coef = 30

[gp]
n_pop = 16
n_gen = 4
top_k = 2

[designer]
sessions = 2
iterations = 4
repetitions = 2

[validation]
runs = 3
";
        let scratch = tempfile::tempdir().unwrap();
        let config_file = scratch.path().join("pipeline.toml");
        fs::write(&config_file, CONFIG).unwrap();

        let run_pipeline = |out: &Path| {
            let overrides = Overrides {
                seed: None,
                problem: None,
                condition: None,
                out: Some(out.to_path_buf()),
            };
            let config = PipelineConfig::load(Some(&config_file), &overrides).unwrap();
            cmd_ela(&config).unwrap();
            cmd_gen_proxies(&config).unwrap();
            cmd_discover(&config).unwrap();
            cmd_validate(&config, false).unwrap();
        };

        let out_a = scratch.path().join("first");
        let out_b = scratch.path().join("second");
        run_pipeline(&out_a);
        run_pipeline(&out_b);

        let first = primary_artifacts(&out_a);
        let second = primary_artifacts(&out_b);
        let names =
            |set: &Vec<(String, Vec<u8>)>| set.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
        assert_eq!(names(&first), names(&second), "artifact sets differ");
        assert!(!first.is_empty());
        for ((name, bytes_a), (_, bytes_b)) in first.iter().zip(&second) {
            assert_eq!(bytes_a, bytes_b, "{name} differs between identical runs");
        }
    });
}

/// Every produced file except the timestamp sidecar log, sorted by path.
fn primary_artifacts(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        let mut entries: Vec<PathBuf> =
            fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                if rel.contains("run.") && rel.ends_with(".log") {
                    continue;
                }
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn a10_llm_proposer_contract_and_offline_fallback() {
    criterion(10, "proposer reply handling and fallback", None, || {
        let incumbent = AlgorithmConfig::default();
        let request = ProposerRequest {
            task_description: "propose the next optimizer configuration".into(),
            incumbent_config: &incumbent,
            incumbent_score: 0.4,
            recent_history: &[],
            schema: CONFIG_SCHEMA,
        };

        let proposer_for = |server: &StubServer, key_var: &str| {
            std::env::set_var(key_var, "stub-credential");
            LlmProposer::new(LlmSettings {
                endpoint: server.endpoint(),
                model: "stub-model".into(),
                timeout_secs: 10,
                key_env: key_var.to_string(),
            })
            .unwrap()
        };

        // Clean JSON is accepted as-is.
        let server = StubServer::start(StubBehavior::ValidConfig).unwrap();
        let mut proposer = proposer_for(&server, "ACCEPTANCE_LLM_KEY_VALID");
        let reply = proposer
            .propose(&request, &mut labeled_stream(10, "proposer-contract", 0))
            .unwrap();
        assert!(reply.config.validate().is_ok());

        // JSON buried in prose is extracted.
        let server = StubServer::start(StubBehavior::ProseWrapped).unwrap();
        let mut proposer = proposer_for(&server, "ACCEPTANCE_LLM_KEY_PROSE");
        let reply = proposer
            .propose(&request, &mut labeled_stream(10, "proposer-contract", 1))
            .unwrap();
        assert!(reply.config.validate().is_ok());

        // A schema violation is a malformed reply, not a transport error.
        let server = StubServer::start(StubBehavior::InvalidSchema).unwrap();
        let mut proposer = proposer_for(&server, "ACCEPTANCE_LLM_KEY_SCHEMA");
        let err = proposer
            .propose(&request, &mut labeled_stream(10, "proposer-contract", 2))
            .unwrap_err();
        assert!(matches!(err, ProposeError::Malformed(_)), "got {err:?}");

        // A hostile endpoint exhausts the retries every iteration, the
        // offline mutator takes over, and the session still finishes.
        let server = StubServer::start(StubBehavior::Garbage).unwrap();
        let mut proposer = proposer_for(&server, "ACCEPTANCE_LLM_KEY_GARBAGE");
        let target = problem_by_name("synthetic:sphere:2", 42).unwrap();
        let proxies = vec![ProxySource::Tree {
            tree: "sum(square(x))".parse().unwrap(),
            spec: proxy_spec(1, target.spec()),
        }];
        let settings = SessionSettings {
            iterations: 100,
            repetitions: 1,
            inner_budget: 50,
            proposer_retries: 3,
        };
        let mut session = DiscoverySession::new(
            Condition::ProxyDriven,
            target.spec().clone(),
            proxies,
            settings,
            4242,
            "fallback-session",
        )
        .unwrap();
        discover(&mut session, &mut proposer).unwrap();

        assert_eq!(session.history.len(), 101, "one seed entry plus every iteration");
        assert_eq!(session.history[0].proposer, "initial");
        for entry in &session.history[1..] {
            assert_eq!(entry.proposer, "fallback:malformed", "iteration {}", entry.iteration);
        }
        assert_eq!(server.request_count(), 300, "three attempts per iteration");
    });
}

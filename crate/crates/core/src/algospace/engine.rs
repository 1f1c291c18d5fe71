//! Budgeted execution of a configured optimizer.
//!
//! One engine covers the whole space: random search is the degenerate case,
//! DE and LSHADE share the generation loop and differ only through the
//! config. All stochastic choices come from a stream derived from the run
//! seed, so a (config, problem, seed, budget) tuple replays exactly.

use rand::distributions::Distribution;
use rand::seq::index::sample as index_sample;
use rand::Rng;
use rand_distr::{Cauchy, Normal};
use thiserror::Error;

use super::{
    AlgorithmConfig, BoundHandling, ControlParam, Crossover, Family, Mutation, RestartPolicy,
    MEMORY_SIZE, MIN_POPULATION,
};
use crate::metrics::{aocc, DEFAULT_CLIP};
use crate::problem::{BudgetedEvaluator, CoreError, RunRecord};
use crate::rng::{labeled_stream, RandomStream};

#[derive(Debug, Error)]
pub enum AlgoError {
    #[error("invalid algorithm config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Per-generation engine state exposed to unit tests.
#[derive(Debug, Default, Clone)]
pub(crate) struct EngineStats {
    /// Population size at the end of each generation.
    pub pop_sizes: Vec<usize>,
    /// Best objective value seen up to the end of each generation.
    pub gen_best: Vec<f64>,
    pub restarts: u32,
}

/// Runs `config` against `evaluator` until the budget is exhausted and
/// returns the completed record. The evaluator must be fresh.
pub fn run(
    config: &AlgorithmConfig,
    evaluator: BudgetedEvaluator,
    seed: u64,
) -> Result<RunRecord, AlgoError> {
    run_detailed(config, evaluator, seed, None).map(|(record, _)| record)
}

/// As [`run`], but also reports engine internals. `init` overrides the
/// initial population (clipped to bounds, sized to the resolved population).
pub(crate) fn run_detailed(
    config: &AlgorithmConfig,
    mut evaluator: BudgetedEvaluator,
    seed: u64,
    init: Option<Vec<Vec<f64>>>,
) -> Result<(RunRecord, EngineStats), AlgoError> {
    config.validate()?;
    if evaluator.used() > 0 {
        return Err(AlgoError::Core(CoreError::EvaluatorNotFresh { used: evaluator.used() }));
    }
    let mut rng = labeled_stream(seed, "algo-run", 0);
    let mut stats = EngineStats::default();
    let outcome = match config.family {
        Family::Rs => random_search(&mut evaluator, &mut rng),
        Family::De | Family::Lshade => {
            de_loop(config, &mut evaluator, &mut rng, init, &mut stats)
        }
    };
    match outcome {
        Err(CoreError::BudgetExhausted { .. }) => {}
        Err(other) => return Err(other.into()),
        Ok(()) => unreachable!("optimizer loops only stop on budget exhaustion"),
    }
    let record = finish(config, &evaluator, seed)?;
    Ok((record, stats))
}

fn finish(
    config: &AlgorithmConfig,
    evaluator: &BudgetedEvaluator,
    seed: u64,
) -> Result<RunRecord, AlgoError> {
    let spec = evaluator.problem().spec().clone();
    let (lo, hi) = spec.score_clip.unwrap_or(DEFAULT_CLIP);
    let mut best_curve: Vec<f64> = evaluator.trace().iter().map(|t| t.best).collect();
    if let Some(opt) = spec.known_optimum {
        for b in &mut best_curve {
            *b -= opt;
        }
    }
    let score = aocc(&best_curve, evaluator.budget(), lo, hi)?;
    Ok(RunRecord {
        problem: spec.name.clone(),
        label: config.family.as_str().to_string(),
        config: config.clone(),
        seed,
        budget: evaluator.budget(),
        ledger: evaluator.ledger(),
        trace: evaluator.trace().iter().map(|t| (t.index, t.raw, t.best)).collect(),
        aocc: score,
        best_value: evaluator.best(),
        best_x: evaluator.best_x().map(<[f64]>::to_vec).unwrap_or_default(),
    })
}

fn uniform_point(spec_lo: &[f64], spec_hi: &[f64], rng: &mut RandomStream) -> Vec<f64> {
    spec_lo
        .iter()
        .zip(spec_hi)
        .map(|(&lo, &hi)| if hi > lo { rng.gen_range(lo..hi) } else { lo })
        .collect()
}

fn random_search(ev: &mut BudgetedEvaluator, rng: &mut RandomStream) -> Result<(), CoreError> {
    let spec = ev.problem().spec().clone();
    loop {
        let x = uniform_point(&spec.lower, &spec.upper, rng);
        ev.evaluate(&x)?;
    }
}

/// Success-history memory for adaptive F and CR.
struct AdaptMemory {
    m_f: [f64; MEMORY_SIZE],
    m_cr: [f64; MEMORY_SIZE],
    next_slot: usize,
}

impl AdaptMemory {
    fn new() -> Self {
        AdaptMemory { m_f: [0.5; MEMORY_SIZE], m_cr: [0.5; MEMORY_SIZE], next_slot: 0 }
    }

    fn draw_f(&self, rng: &mut RandomStream) -> f64 {
        let slot = rng.gen_range(0..MEMORY_SIZE);
        let cauchy = Cauchy::new(self.m_f[slot], 0.1).expect("valid scale");
        loop {
            let f = cauchy.sample(rng);
            if f > 0.0 {
                return f.min(1.0);
            }
        }
    }

    fn draw_cr(&self, rng: &mut RandomStream) -> f64 {
        let slot = rng.gen_range(0..MEMORY_SIZE);
        let normal = Normal::new(self.m_cr[slot], 0.1).expect("valid sd");
        normal.sample(rng).clamp(0.0, 1.0)
    }

    /// Weighted Lehmer mean for F, weighted arithmetic mean for CR, weights
    /// proportional to the fitness improvement each success produced.
    fn update(&mut self, s_f: &[f64], s_cr: &[f64], deltas: &[f64]) {
        let total: f64 = deltas.iter().sum();
        if s_f.is_empty() || total <= 0.0 {
            return;
        }
        let mut num = 0.0;
        let mut den = 0.0;
        let mut cr_acc = 0.0;
        for ((&f, &cr), &d) in s_f.iter().zip(s_cr).zip(deltas) {
            let w = d / total;
            num += w * f * f;
            den += w * f;
            cr_acc += w * cr;
        }
        if den > 0.0 {
            self.m_f[self.next_slot] = num / den;
        }
        self.m_cr[self.next_slot] = cr_acc;
        self.next_slot = (self.next_slot + 1) % MEMORY_SIZE;
    }
}

fn apply_bounds(x: &mut [f64], lo: &[f64], hi: &[f64], handling: BoundHandling) {
    for j in 0..x.len() {
        if handling == BoundHandling::Reflect {
            let width = hi[j] - lo[j];
            if width > 0.0 && (x[j] < lo[j] || x[j] > hi[j]) {
                let t = (x[j] - lo[j]).rem_euclid(2.0 * width);
                x[j] = lo[j] + if t <= width { t } else { 2.0 * width - t };
            }
        }
        x[j] = x[j].clamp(lo[j], hi[j]);
    }
}

/// Indices of the `count` best individuals (ascending objective).
fn best_indices(ys: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by(|&a, &b| ys[a].total_cmp(&ys[b]));
    order.truncate(count.max(1));
    order
}

struct DeState {
    pop: Vec<Vec<f64>>,
    ys: Vec<f64>,
    archive: Vec<Vec<f64>>,
}

impl DeState {
    /// Drops the worst individuals down to `target` population members.
    fn shrink_to(&mut self, target: usize) {
        while self.pop.len() > target.max(MIN_POPULATION as usize) {
            let worst = (0..self.ys.len())
                .max_by(|&a, &b| self.ys[a].total_cmp(&self.ys[b]))
                .expect("non-empty population");
            self.pop.swap_remove(worst);
            self.ys.swap_remove(worst);
        }
    }
}

fn init_population(
    ev: &mut BudgetedEvaluator,
    rng: &mut RandomStream,
    size: usize,
    seeded: Option<Vec<Vec<f64>>>,
) -> Result<DeState, CoreError> {
    let spec = ev.problem().spec().clone();
    let mut pop = Vec::with_capacity(size);
    let mut ys = Vec::with_capacity(size);
    for i in 0..size {
        let x = match &seeded {
            Some(given) if i < given.len() => given[i].clone(),
            _ => uniform_point(&spec.lower, &spec.upper, rng),
        };
        let y = ev.evaluate(&x)?;
        pop.push(x);
        ys.push(y);
    }
    Ok(DeState { pop, ys, archive: Vec::new() })
}

fn de_loop(
    config: &AlgorithmConfig,
    ev: &mut BudgetedEvaluator,
    rng: &mut RandomStream,
    init: Option<Vec<Vec<f64>>>,
    stats: &mut EngineStats,
) -> Result<(), CoreError> {
    let spec = ev.problem().spec().clone();
    let dim = spec.dim;
    let budget = ev.budget();
    let n_init = (config.population_size.resolve(dim) as u64).min(budget).max(1) as usize;

    let mut state = init_population(ev, rng, n_init, init)?;
    let mut memory = AdaptMemory::new();
    let mut last_best = state.ys.iter().copied().fold(f64::INFINITY, f64::min);
    let mut stagnant_gens = 0u32;

    loop {
        let n = state.pop.len();
        let mut s_f = Vec::new();
        let mut s_cr = Vec::new();
        let mut deltas = Vec::new();
        // Trials replace parents only after the full generation, matching
        // the classic synchronous update.
        let mut replacements: Vec<(usize, Vec<f64>, f64)> = Vec::new();

        let pbest_count = ((config.pbest_fraction * n as f64).round() as usize).max(2).min(n);
        let pbest_pool = best_indices(&state.ys, pbest_count);
        let best_idx = pbest_pool[0];

        for i in 0..n {
            let f_i = match config.f {
                ControlParam::Fixed(v) => v,
                ControlParam::Adaptive(_) => memory.draw_f(rng),
            };
            let cr_i = match config.cr {
                ControlParam::Fixed(v) => v,
                ControlParam::Adaptive(_) => memory.draw_cr(rng),
            };

            let mut mutant = mutate(config, &state, i, best_idx, &pbest_pool, f_i, rng);
            apply_bounds(&mut mutant, &spec.lower, &spec.upper, config.bound_handling);
            let trial = crossover(&state.pop[i], &mutant, cr_i, config.crossover, rng);
            let y = ev.evaluate(&trial)?;

            if y <= state.ys[i] {
                if y < state.ys[i] {
                    s_f.push(f_i);
                    s_cr.push(cr_i);
                    deltas.push(state.ys[i] - y);
                    if config.archive {
                        state.archive.push(state.pop[i].clone());
                    }
                }
                replacements.push((i, trial, y));
            }
        }

        for (i, x, y) in replacements {
            state.pop[i] = x;
            state.ys[i] = y;
        }
        if config.f.is_adaptive() || config.cr.is_adaptive() {
            memory.update(&s_f, &s_cr, &deltas);
        }
        while state.archive.len() > state.pop.len() {
            let drop = rng.gen_range(0..state.archive.len());
            state.archive.swap_remove(drop);
        }

        if config.lpsr {
            // Linear schedule from the initial size down to the minimum,
            // keyed on budget consumed so far.
            let frac = ev.used() as f64 / budget as f64;
            let target = (n_init as f64
                - (n_init as f64 - MIN_POPULATION as f64) * frac)
                .round() as usize;
            state.shrink_to(target);
        }

        let gen_best = state.ys.iter().copied().fold(f64::INFINITY, f64::min);
        stats.pop_sizes.push(state.pop.len());
        stats.gen_best.push(ev.best());

        if config.restart == RestartPolicy::OnStagnation {
            let rel = (last_best - gen_best) / last_best.abs().max(1e-30);
            if rel > config.restart_tol {
                stagnant_gens = 0;
            } else {
                stagnant_gens += 1;
            }
            last_best = gen_best.min(last_best);
            if stagnant_gens >= config.restart_window {
                let size = state.pop.len();
                state = init_population(ev, rng, size, None)?;
                memory = AdaptMemory::new();
                last_best = state.ys.iter().copied().fold(f64::INFINITY, f64::min);
                stagnant_gens = 0;
                stats.restarts += 1;
            }
        } else {
            last_best = gen_best.min(last_best);
        }
    }
}

/// Picks `count` distinct population indices, none equal to the excluded
/// ones. Falls back to allowing repeats only if the population is too small,
/// which validation rules out for real runs.
fn distinct_indices(
    n: usize,
    exclude: &[usize],
    count: usize,
    rng: &mut RandomStream,
) -> Vec<usize> {
    let mut picked = Vec::with_capacity(count);
    let mut guard = 0;
    while picked.len() < count {
        let candidates = index_sample(rng, n, count.min(n));
        for idx in candidates {
            if picked.len() == count {
                break;
            }
            if !exclude.contains(&idx) && !picked.contains(&idx) {
                picked.push(idx);
            }
        }
        guard += 1;
        if guard > 64 {
            while picked.len() < count {
                picked.push(rng.gen_range(0..n));
            }
        }
    }
    picked
}

fn mutate(
    config: &AlgorithmConfig,
    state: &DeState,
    i: usize,
    best_idx: usize,
    pbest_pool: &[usize],
    f: f64,
    rng: &mut RandomStream,
) -> Vec<f64> {
    let pop = &state.pop;
    let n = pop.len();
    let dim = pop[0].len();
    match config.mutation {
        Mutation::Rand1 => {
            let r = distinct_indices(n, &[i], 3, rng);
            (0..dim).map(|j| pop[r[0]][j] + f * (pop[r[1]][j] - pop[r[2]][j])).collect()
        }
        Mutation::Best1 => {
            let r = distinct_indices(n, &[i, best_idx], 2, rng);
            (0..dim).map(|j| pop[best_idx][j] + f * (pop[r[0]][j] - pop[r[1]][j])).collect()
        }
        Mutation::CurrentToPbest => {
            let pbest = &pop[*pbest_pool
                .get(rng.gen_range(0..pbest_pool.len()))
                .expect("non-empty pbest pool")];
            let r1 = distinct_indices(n, &[i], 1, rng)[0];
            // r2 may come from the archive when one is kept.
            let union = n + if config.archive { state.archive.len() } else { 0 };
            let mut r2;
            let mut guard = 0;
            loop {
                r2 = rng.gen_range(0..union);
                if (r2 != i && r2 != r1) || guard > 64 {
                    break;
                }
                guard += 1;
            }
            let r2_vec: &[f64] =
                if r2 < n { &pop[r2] } else { &state.archive[r2 - n] };
            (0..dim)
                .map(|j| {
                    pop[i][j] + f * (pbest[j] - pop[i][j]) + f * (pop[r1][j] - r2_vec[j])
                })
                .collect()
        }
    }
}

fn crossover(
    target: &[f64],
    mutant: &[f64],
    cr: f64,
    kind: Crossover,
    rng: &mut RandomStream,
) -> Vec<f64> {
    let dim = target.len();
    let mut trial = target.to_vec();
    match kind {
        Crossover::Binomial => {
            let j_rand = rng.gen_range(0..dim);
            for j in 0..dim {
                if j == j_rand || rng.gen::<f64>() < cr {
                    trial[j] = mutant[j];
                }
            }
        }
        Crossover::Exponential => {
            let start = rng.gen_range(0..dim);
            let mut len = 1;
            while len < dim && rng.gen::<f64>() < cr {
                len += 1;
            }
            for k in 0..len {
                let j = (start + k) % dim;
                trial[j] = mutant[j];
            }
        }
    }
    trial
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algospace::{de_baseline, lshade_baseline, rs_baseline, PopulationSize};
    use crate::problem::{EvalKind, Phase, Problem, ProblemSpec};
    use crate::problems::{synthetic, SyntheticId};

    fn sphere_origin(dim: usize) -> Problem {
        let spec = ProblemSpec {
            name: format!("sphere-origin-{dim}d"),
            dim,
            lower: vec![-5.0; dim],
            upper: vec![5.0; dim],
            maximize: false,
            known_optimum: Some(0.0),
            score_clip: None,
        };
        Problem::new(spec, move |x: &[f64]| x.iter().map(|v| v * v).sum()).unwrap()
    }

    fn fresh(problem: &Problem, budget: u64) -> BudgetedEvaluator {
        BudgetedEvaluator::new(problem.clone(), budget, EvalKind::Target, Phase::Validation)
            .unwrap()
    }

    #[test]
    fn budget_consumed_exactly() {
        let problem = sphere_origin(3);
        for cfg in [rs_baseline(), de_baseline(3, 97), lshade_baseline(3, 97)] {
            let record = run(&cfg, fresh(&problem, 97), 11).unwrap();
            assert_eq!(record.trace.len(), 97, "family {:?}", cfg.family);
            assert_eq!(record.ledger.validation.target_evals, 97);
        }
    }

    #[test]
    fn reruns_reproduce_exactly() {
        let problem = sphere_origin(4);
        for cfg in [rs_baseline(), de_baseline(4, 300), lshade_baseline(4, 300)] {
            let a = run(&cfg, fresh(&problem, 300), 7).unwrap();
            let b = run(&cfg, fresh(&problem, 300), 7).unwrap();
            assert_eq!(a.trace, b.trace);
            assert_eq!(a.aocc, b.aocc);
            let c = run(&cfg, fresh(&problem, 300), 8).unwrap();
            assert_ne!(a.trace, c.trace, "different seeds must diverge");
        }
    }

    #[test]
    fn best_curve_is_monotone_nonincreasing() {
        let problem = synthetic(SyntheticId::Rastrigin, 5, 99).unwrap();
        let record = run(&de_baseline(5, 400), fresh(&problem, 400), 3).unwrap();
        for pair in record.trace.windows(2) {
            assert!(pair[1].2 <= pair[0].2);
        }
    }

    #[test]
    fn de_improves_over_initial_population_on_sphere() {
        let problem = sphere_origin(5);
        let record = run(&de_baseline(5, 1000), fresh(&problem, 1000), 5).unwrap();
        let init_best = record.trace[..50].iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
        assert!(
            record.best_value < 0.1 * init_best,
            "expected 10x improvement, got {} vs {}",
            record.best_value,
            init_best
        );
    }

    #[test]
    fn population_seeded_at_optimum_never_leaves_it() {
        // Greedy selection: a uniformly optimal population can only be
        // replaced by equally good trials.
        let problem = sphere_origin(3);
        let cfg = AlgorithmConfig {
            population_size: PopulationSize::Fixed(10),
            ..de_baseline(3, 500)
        };
        let init = vec![vec![0.0; 3]; 10];
        let (record, _) =
            run_detailed(&cfg, fresh(&problem, 500), 13, Some(init)).unwrap();
        assert_eq!(record.best_value, 0.0);
        // After init, every recorded best stays exactly at the optimum.
        assert!(record.trace.iter().skip(10).all(|t| t.2 == 0.0));
    }

    #[test]
    fn lshade_population_shrinks_linearly() {
        let problem = sphere_origin(5);
        let cfg = lshade_baseline(5, 2000);
        let (_, stats) = run_detailed(&cfg, fresh(&problem, 2000), 21, None).unwrap();
        let sizes = &stats.pop_sizes;
        assert!(sizes.len() > 3);
        for pair in sizes.windows(2) {
            assert!(pair[1] <= pair[0], "population grew: {sizes:?}");
        }
        assert!(*sizes.first().unwrap() > *sizes.last().unwrap());
        assert_eq!(*sizes.last().unwrap(), MIN_POPULATION as usize);
    }

    #[test]
    fn lshade_beats_random_search_on_sphere() {
        let problem = synthetic(SyntheticId::Sphere, 5, 7).unwrap();
        let budget = 250;
        let mut wins = 0;
        for seed in 0..5 {
            let ls = run(&lshade_baseline(5, budget), fresh(&problem, budget), seed).unwrap();
            let rs = run(&rs_baseline(), fresh(&problem, budget), seed).unwrap();
            if ls.aocc > rs.aocc {
                wins += 1;
            }
        }
        assert!(wins >= 4, "lshade won only {wins}/5 runs");
    }

    #[test]
    fn restart_triggers_on_flat_landscape() {
        let spec = ProblemSpec {
            name: "flat".into(),
            dim: 2,
            lower: vec![0.0; 2],
            upper: vec![1.0; 2],
            maximize: false,
            known_optimum: None,
            score_clip: None,
        };
        let problem = Problem::new(spec, |_x: &[f64]| 1.0).unwrap();
        let cfg = AlgorithmConfig {
            population_size: PopulationSize::Fixed(5),
            restart: RestartPolicy::OnStagnation,
            restart_window: 3,
            ..de_baseline(2, 200)
        };
        let (_, stats) = run_detailed(&cfg, fresh(&problem, 200), 2, None).unwrap();
        assert!(stats.restarts >= 2, "expected restarts, got {}", stats.restarts);
    }

    #[test]
    fn stale_evaluator_rejected() {
        let problem = sphere_origin(2);
        let mut ev = fresh(&problem, 10);
        ev.evaluate(&[0.0, 0.0]).unwrap();
        let err = run(&rs_baseline(), ev, 1).unwrap_err();
        assert!(matches!(err, AlgoError::Core(CoreError::EvaluatorNotFresh { used: 1 })));
    }

    #[test]
    fn invalid_config_rejected_before_any_evaluation() {
        let problem = sphere_origin(2);
        let mut cfg = de_baseline(2, 50);
        cfg.f = ControlParam::Fixed(-1.0);
        assert!(matches!(run(&cfg, fresh(&problem, 50), 1), Err(AlgoError::InvalidConfig(_))));
    }

    #[test]
    fn budget_smaller_than_population_still_completes() {
        let problem = sphere_origin(3);
        let cfg = AlgorithmConfig {
            population_size: PopulationSize::Fixed(50),
            ..de_baseline(3, 7)
        };
        let record = run(&cfg, fresh(&problem, 7), 4).unwrap();
        assert_eq!(record.trace.len(), 7);
    }

    #[test]
    fn reflect_bound_handling_keeps_points_inside() {
        let mut x = vec![5.7, -6.2, 3.0, 17.0];
        apply_bounds(&mut x, &[-5.0; 4], &[5.0; 4], BoundHandling::Reflect);
        assert!((x[0] - 4.3).abs() < 1e-12);
        assert!((x[1] - (-3.8)).abs() < 1e-12);
        assert!((x[2] - 3.0).abs() < 1e-12);
        assert!(x.iter().all(|v| (-5.0..=5.0).contains(v)));
    }

    #[test]
    fn exponential_crossover_copies_contiguous_block() {
        let mut rng = labeled_stream(5, "xover-test", 0);
        let target = vec![0.0; 8];
        let mutant = vec![1.0; 8];
        for _ in 0..100 {
            let trial = crossover(&target, &mutant, 0.7, Crossover::Exponential, &mut rng);
            let ones: Vec<usize> =
                (0..8).filter(|&j| trial[j] == 1.0).collect();
            assert!(!ones.is_empty());
            // Block is contiguous modulo wrap-around: at most one gap in the
            // circular index sequence.
            if ones.len() < 8 {
                let mut gaps = 0;
                for k in 0..ones.len() {
                    let next = ones[(k + 1) % ones.len()];
                    if (ones[k] + 1) % 8 != next && ones.len() > 1 {
                        gaps += 1;
                    }
                }
                assert!(gaps <= 1, "non-contiguous block: {ones:?}");
            }
        }
    }

    #[test]
    fn adaptive_memory_update_is_weighted() {
        let mut mem = AdaptMemory::new();
        // Single dominant success pulls the memory toward its parameters.
        mem.update(&[0.9, 0.1], &[0.8, 0.2], &[100.0, 1e-9]);
        assert!((mem.m_f[0] - 0.9).abs() < 1e-6);
        assert!((mem.m_cr[0] - 0.8).abs() < 1e-6);
        // Empty success set leaves memory untouched.
        let before = mem.m_f;
        mem.update(&[], &[], &[]);
        assert_eq!(before, mem.m_f);
    }
}

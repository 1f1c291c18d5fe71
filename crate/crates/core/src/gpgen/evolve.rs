//! Evolution of proxy expressions toward a target feature distribution.
//!
//! A generational loop over typed trees: fitness is the landscape distance
//! between the candidate's feature distribution and the target's, both built
//! on the same design points and the same subsample draws, so a candidate
//! that reproduces the target's values scores zero exactly.

use rand::Rng;
use rayon::prelude::*;

use super::compile::compile_and_evaluate;
use super::tree::{init_half_and_half, random_subtree, ExpressionTree, Node, CONST_RANGE};
use super::GpError;
use crate::ela::{
    feature_distribution, landscape_distance, DesignSample, DistributionParams,
    FeatureDistribution, FeatureOptions, PairwiseDistances,
};
use crate::rng::{labeled_stream, RandomStream};

/// Fitness assigned to candidates whose outputs are non-finite or constant.
pub const PENALTY: f64 = 1e9;

/// Output ranges narrower than this count as constant.
pub const CONSTANT_RANGE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct GpParams {
    pub n_pop: usize,
    pub n_gen: usize,
    /// Crossover probability per selected pair.
    pub p_c: f64,
    /// Subtree-mutation probability per offspring.
    pub p_m: f64,
    pub tournament_k: usize,
    pub min_depth: usize,
    pub max_depth: usize,
    /// When false, `rand` leaves are excluded and evolution is a pure
    /// function of the seed and the target.
    pub include_rand: bool,
    /// All-time archive capacity (structurally distinct candidates).
    pub archive_cap: usize,
}

impl Default for GpParams {
    fn default() -> Self {
        GpParams {
            n_pop: 50,
            n_gen: 50,
            p_c: 0.5,
            p_m: 0.1,
            tournament_k: 3,
            min_depth: 3,
            max_depth: 12,
            include_rand: true,
            archive_cap: 64,
        }
    }
}

/// One scored expression.
#[derive(Debug, Clone)]
pub struct ProxyCandidate {
    pub tree: ExpressionTree,
    /// Landscape distance to the target; `PENALTY` when penalized.
    pub fitness: f64,
    pub penalized: bool,
    /// Index of the random stream that scored this candidate, kept so a
    /// single evaluation can be replayed outside the full run.
    pub fitness_stream: u64,
}

/// Everything a single fitness evaluation needs.
pub struct FitnessEnv<'a> {
    pub target: &'a FeatureDistribution,
    pub design_x: &'a [Vec<f64>],
    pub distances: &'a PairwiseDistances,
    pub dist_params: DistributionParams,
    pub opts: FeatureOptions,
}

/// Scores one tree against the target: evaluate over the design, penalize
/// non-finite or constant outputs, otherwise build the candidate's feature
/// distribution on the target's retained features and subsample draws and
/// return the landscape distance.
pub fn proxy_fitness(
    tree: &ExpressionTree,
    env: &FitnessEnv<'_>,
    rng: &mut RandomStream,
) -> Result<(f64, bool), GpError> {
    let y = compile_and_evaluate(tree, env.design_x, rng);
    let finite = y.iter().all(|v| v.is_finite());
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !finite || !(hi - lo).is_finite() || hi - lo < CONSTANT_RANGE {
        return Ok((PENALTY, true));
    }
    let sample = DesignSample::new(env.design_x.to_vec(), y)?;
    let dist = feature_distribution(
        &sample,
        Some(env.distances),
        &env.opts,
        &env.dist_params,
        Some(&env.target.retained),
        env.target.sampler_seed,
    )?;
    let d = landscape_distance(env.target, &dist)?;
    Ok((d, false))
}

/// Result of one evolution run.
#[derive(Debug, Clone)]
pub struct EvolveReport {
    /// Archive plus final population, structurally deduplicated and sorted
    /// best first (valid candidates before penalized ones).
    pub ranked: Vec<ProxyCandidate>,
    /// Best fitness among each generation's evaluations, including the
    /// initial population at index 0.
    pub best_by_generation: Vec<f64>,
}

impl EvolveReport {
    /// The `k` best structurally distinct valid candidates.
    pub fn top(&self, k: usize) -> Vec<&ProxyCandidate> {
        self.ranked.iter().filter(|c| !c.penalized).take(k).collect()
    }
}

/// Candidate ordering: validity first, then fitness, then the text form as a
/// deterministic tiebreak.
fn rank_key(c: &ProxyCandidate) -> (bool, f64) {
    (c.penalized, c.fitness)
}

fn better(a: &ProxyCandidate, b: &ProxyCandidate) -> bool {
    rank_key(a) < rank_key(b)
}

/// Evolves expressions toward `target` on the design `x` (the same points
/// the target's distribution was built from). Deterministic given the seed;
/// with `include_rand` disabled, bitwise so.
pub fn evolve(
    target: &FeatureDistribution,
    x: &[Vec<f64>],
    params: &GpParams,
    dist_params: &DistributionParams,
    opts: &FeatureOptions,
    seed: u64,
) -> Result<EvolveReport, GpError> {
    let mut rng = labeled_stream(seed, "gp-evolve", 0);
    let init = init_half_and_half(
        params.n_pop,
        params.min_depth,
        params.max_depth,
        params.include_rand,
        &mut rng,
    )?;
    evolve_from(init, target, x, params, dist_params, opts, seed, rng)
}

/// The loop behind [`evolve`], taking an explicit initial population.
#[allow(clippy::too_many_arguments)]
fn evolve_from(
    mut pop: Vec<ExpressionTree>,
    target: &FeatureDistribution,
    x: &[Vec<f64>],
    params: &GpParams,
    dist_params: &DistributionParams,
    opts: &FeatureOptions,
    seed: u64,
    mut rng: RandomStream,
) -> Result<EvolveReport, GpError> {
    validate_params(params)?;
    if target.retained.is_empty() {
        return Err(GpError::Ela(crate::ela::ElaError::EmptyRetention));
    }
    let n = x.len();
    let m = (dist_params.rate * n as f64).round() as usize;
    if n < 4 || m < 4 {
        return Err(GpError::InvalidParams(format!(
            "design of {n} points leaves subsamples of {m}"
        )));
    }
    if pop.len() != params.n_pop {
        return Err(GpError::InvalidParams(format!(
            "initial population of {} for n_pop {}",
            pop.len(),
            params.n_pop
        )));
    }

    let distances = PairwiseDistances::compute(x);
    let env = FitnessEnv {
        target,
        design_x: x,
        distances: &distances,
        dist_params: *dist_params,
        opts: opts.clone(),
    };

    let mut archive: Vec<(String, ProxyCandidate)> = Vec::new();
    let mut best_by_generation = Vec::with_capacity(params.n_gen + 1);
    let mut finals: Vec<ProxyCandidate> = Vec::new();

    for gen in 0..=params.n_gen {
        // Fitness evaluations are independent; each individual draws from
        // its own indexed stream so the parallel schedule cannot matter.
        let scored: Vec<ProxyCandidate> = pop
            .par_iter()
            .enumerate()
            .map(|(i, tree)| {
                let stream = (gen * params.n_pop + i) as u64;
                let mut eval_rng = labeled_stream(seed, "gp-eval", stream);
                proxy_fitness(tree, &env, &mut eval_rng).map(|(fitness, penalized)| {
                    ProxyCandidate {
                        tree: tree.clone(),
                        fitness,
                        penalized,
                        fitness_stream: stream,
                    }
                })
            })
            .collect::<Result<_, _>>()?;

        best_by_generation.push(
            scored.iter().map(|c| c.fitness).fold(f64::INFINITY, f64::min),
        );
        for cand in scored.iter().filter(|c| !c.penalized) {
            archive_insert(&mut archive, cand.clone(), params.archive_cap);
        }

        if gen == params.n_gen {
            finals = scored;
            break;
        }

        // Elitism: the generation's best survives unchanged.
        let elite = scored
            .iter()
            .enumerate()
            .reduce(|best, cur| if better(cur.1, best.1) { cur } else { best })
            .map(|(i, _)| i)
            .expect("population is never empty");
        let mut offspring: Vec<ExpressionTree> = (0..params.n_pop - 1)
            .map(|_| pop[tournament(&scored, params.tournament_k, &mut rng)].clone())
            .collect();
        for i in (1..offspring.len()).step_by(2) {
            if rng.gen::<f64>() < params.p_c {
                let (left, right) = try_crossover(
                    &offspring[i - 1],
                    &offspring[i],
                    params.min_depth,
                    params.max_depth,
                    &mut rng,
                );
                if let Some(t) = left {
                    offspring[i - 1] = t;
                }
                if let Some(t) = right {
                    offspring[i] = t;
                }
            }
        }
        for child in &mut offspring {
            if rng.gen::<f64>() < params.p_m {
                if let Some(t) = try_mutate(
                    child,
                    params.min_depth,
                    params.max_depth,
                    params.include_rand,
                    &mut rng,
                ) {
                    *child = t;
                }
            }
        }
        let mut next = Vec::with_capacity(params.n_pop);
        next.push(pop[elite].clone());
        next.extend(offspring);
        pop = next;
    }

    let mut ranked: Vec<ProxyCandidate> = archive.into_iter().map(|(_, c)| c).collect();
    for cand in finals {
        let key = cand.tree.to_string();
        match ranked.iter_mut().find(|c| c.tree.to_string() == key) {
            Some(existing) => {
                if better(&cand, existing) {
                    *existing = cand;
                }
            }
            None => ranked.push(cand),
        }
    }
    ranked.sort_by(|a, b| {
        rank_key(a)
            .partial_cmp(&rank_key(b))
            .expect("fitness is never NaN")
            .then_with(|| a.tree.to_string().cmp(&b.tree.to_string()))
    });
    if ranked.iter().all(|c| c.penalized) {
        return Err(GpError::NoValidCandidate);
    }
    Ok(EvolveReport { ranked, best_by_generation })
}

fn validate_params(params: &GpParams) -> Result<(), GpError> {
    if params.n_pop < 2 || params.tournament_k == 0 || params.archive_cap == 0 {
        return Err(GpError::InvalidParams("population, tournament, and archive must be nonempty".into()));
    }
    if !(0.0..=1.0).contains(&params.p_c) || !(0.0..=1.0).contains(&params.p_m) {
        return Err(GpError::InvalidParams("variation probabilities outside [0, 1]".into()));
    }
    if params.min_depth < 3 || params.min_depth > params.max_depth {
        return Err(GpError::InvalidParams(format!(
            "depth window [{}, {}] out of order or below 3",
            params.min_depth, params.max_depth
        )));
    }
    Ok(())
}

/// Index of the best of `k` uniform draws. A valid candidate always beats a
/// penalized one; ties keep the earliest draw.
fn tournament(scored: &[ProxyCandidate], k: usize, rng: &mut RandomStream) -> usize {
    let mut best = rng.gen_range(0..scored.len());
    for _ in 1..k {
        let c = rng.gen_range(0..scored.len());
        if better(&scored[c], &scored[best]) {
            best = c;
        }
    }
    best
}

/// Typed one-point crossover. A node is drawn in the left parent, then a
/// node of the same output category in the right parent, and the subtrees
/// swap. Each child that violates the depth window is dropped in favor of
/// its parent (`None`).
fn try_crossover(
    a: &ExpressionTree,
    b: &ExpressionTree,
    min_depth: usize,
    max_depth: usize,
    rng: &mut RandomStream,
) -> (Option<ExpressionTree>, Option<ExpressionTree>) {
    let info_a = a.root().node_info();
    let info_b = b.root().node_info();
    let ia = rng.gen_range(0..info_a.len());
    let want = info_a[ia].0;
    let matches: Vec<usize> = info_b
        .iter()
        .enumerate()
        .filter(|(_, (ty, _))| *ty == want)
        .map(|(i, _)| i)
        .collect();
    if matches.is_empty() {
        return (None, None);
    }
    let ib = matches[rng.gen_range(0..matches.len())];
    let sub_a = a.root().subtree(ia).clone();
    let sub_b = b.root().subtree(ib).clone();
    let child = |parent: &ExpressionTree, at: usize, graft: Node| {
        let mut root = parent.root().clone();
        root.replace(at, graft);
        let depth = root.depth();
        if depth < min_depth || depth > max_depth {
            return None;
        }
        debug_assert!(root.check_types().is_ok());
        Some(ExpressionTree::new(root).expect("same-category swap preserves typing"))
    };
    (child(a, ia, sub_b), child(b, ib, sub_a))
}

/// Subtree mutation. A constant node has its value resampled; any other
/// node is replaced by a fresh subtree of the same output category grown
/// within the remaining depth budget. Depth violations keep the parent.
fn try_mutate(
    tree: &ExpressionTree,
    min_depth: usize,
    max_depth: usize,
    include_rand: bool,
    rng: &mut RandomStream,
) -> Option<ExpressionTree> {
    let info = tree.root().node_info();
    let idx = rng.gen_range(0..info.len());
    let (want, node_depth) = info[idx];
    let replacement = match tree.root().subtree(idx) {
        Node::Const(_) => Node::Const(rng.gen_range(CONST_RANGE.0..=CONST_RANGE.1)),
        _ => {
            let budget = max_depth - node_depth;
            let target = rng.gen_range(0..=budget);
            random_subtree(rng, want, 0, target, false, 0, include_rand)
        }
    };
    let mut root = tree.root().clone();
    root.replace(idx, replacement);
    let depth = root.depth();
    if depth < min_depth || depth > max_depth {
        return None;
    }
    debug_assert!(root.check_types().is_ok());
    Some(ExpressionTree::new(root).expect("category-preserving graft keeps typing"))
}

/// Keeps the archive sorted best-first, structurally deduplicated, and
/// bounded.
fn archive_insert(archive: &mut Vec<(String, ProxyCandidate)>, cand: ProxyCandidate, cap: usize) {
    let key = cand.tree.to_string();
    match archive.iter_mut().find(|(k, _)| *k == key) {
        Some((_, existing)) => {
            if !better(&cand, existing) {
                return;
            }
            *existing = cand;
        }
        None => archive.push((key, cand)),
    }
    archive.sort_by(|(ka, a), (kb, b)| {
        rank_key(a)
            .partial_cmp(&rank_key(b))
            .expect("fitness is never NaN")
            .then_with(|| ka.cmp(kb))
    });
    archive.truncate(cap);
}

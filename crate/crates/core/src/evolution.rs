//! Elitist genetic optimizer over trade matrices.
//!
//! Each generation keeps the top individuals unchanged, refills the rest with
//! children bred from a small mating pool (row-block crossover followed by
//! masked Gaussian mutation under a decaying rate), adjusts every child into
//! feasibility and scores it. Runs are bit-reproducible for a fixed seed:
//! all randomness flows through one ChaCha stream consumed on the sequential
//! path, while scoring and diversity run in parallel over ordered slices.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Scenario, SurplusFloorPolicy};
use crate::error::{Error, Result};
use crate::fitness::{evaluate_adjusted, f_max, FitnessBreakdown, FitnessWeights};
use crate::genome::{adjust_with_mask, random_individual, TradeMatrix, ValidityMask};

/// All knobs of one optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub pop_size: usize,
    pub generations: usize,
    /// Individuals copied unchanged into the next generation.
    pub elite_size: usize,
    /// Parents are drawn from the best `mating_pool_size` non-elite individuals.
    pub mating_pool_size: usize,
    /// Floor of the decaying mutation rate.
    pub p_min: f64,
    /// Standard deviation of the Gaussian mutation step, kWh.
    pub sigma: f64,
    pub seed: u64,
    pub weights: FitnessWeights,
    pub policy: SurplusFloorPolicy,
}

impl GaConfig {
    /// Baseline configuration: 500 generations, population 80, elite 13,
    /// rate floor 0.005, mating pool a quarter of the population, mutation
    /// step a tenth of the interaction cap.
    pub fn baseline(thv: f64) -> Self {
        GaConfig {
            pop_size: 80,
            generations: 500,
            elite_size: 13,
            mating_pool_size: 20,
            p_min: 0.005,
            sigma: 0.1 * thv,
            seed: 120,
            weights: FitnessWeights::default(),
            policy: SurplusFloorPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pop_size < self.elite_size + 1 {
            return Err(Error::InvalidConfig(format!(
                "pop_size {} must exceed elite_size {}",
                self.pop_size, self.elite_size
            )));
        }
        if self.mating_pool_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "mating_pool_size must be at least 2, got {}",
                self.mating_pool_size
            )));
        }
        if !(self.p_min > 0.0 && self.p_min <= 0.1) {
            return Err(Error::InvalidConfig(format!(
                "p_min must lie in (0, 0.1], got {}",
                self.p_min
            )));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.generations == 0 {
            return Err(Error::InvalidConfig("generations must be at least 1".into()));
        }
        self.weights.validate()
    }
}

/// Telemetry emitted once per generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Best score seen so far in the run (non-decreasing).
    pub best_fitness: f64,
    pub mean_fitness: f64,
    /// Mean pairwise distance between individuals, kWh.
    pub diversity: f64,
    pub mutation_rate: f64,
    pub exploration_pct: f64,
    pub exploitation_pct: f64,
    /// Stable microgrids under the best individual so far.
    pub stable_count_best: usize,
}

/// Outcome of a run: the best adjusted individual ever scored, its breakdown,
/// per-generation telemetry and the scenario as it was optimized (roles
/// resolved).
#[derive(Debug, Clone)]
pub struct EvolveResult {
    pub best: TradeMatrix,
    pub best_breakdown: FitnessBreakdown,
    pub stats: Vec<GenerationStats>,
    pub scenario: Scenario,
}

/// Mutation probability at `generation` of `total`: decays linearly from 0.1
/// to the floor `p_min`.
pub fn mutation_rate(generation: usize, total: usize, p_min: f64) -> Result<f64> {
    if total == 0 {
        return Err(Error::InvalidConfig(
            "mutation schedule needs a positive generation count".into(),
        ));
    }
    Ok((0.1 * (1.0 - generation as f64 / total as f64)).max(p_min))
}

/// Replaces a contiguous block of rows of `parent1` with `parent2`'s rows.
/// Block endpoints are drawn uniformly; every child row comes wholly from
/// exactly one parent.
pub fn crossover<R: Rng>(
    parent1: &TradeMatrix,
    parent2: &TradeMatrix,
    rng: &mut R,
) -> TradeMatrix {
    assert_eq!(parent1.n(), parent2.n(), "parents must have identical size");
    let n = parent1.n();
    let a = rng.gen_range(0..n);
    let b = rng.gen_range(0..n);
    let (r1, r2) = if a <= b { (a, b) } else { (b, a) };
    crossover_block(parent1, parent2, r1, r2)
}

/// Deterministic splice used by `crossover` once the block is chosen.
pub fn crossover_block(
    parent1: &TradeMatrix,
    parent2: &TradeMatrix,
    r1: usize,
    r2: usize,
) -> TradeMatrix {
    let mut child = parent1.clone();
    child.splice_rows(parent2, r1, r2);
    child
}

/// Perturbs valid positions with probability `rate` by Gaussian noise of
/// standard deviation `sigma`, then clamps valid entries to `[0, thv]`.
/// Invalid positions are never touched.
pub fn mutate<R: Rng>(
    mut individual: TradeMatrix,
    mask: &ValidityMask,
    rate: f64,
    sigma: f64,
    thv: f64,
    rng: &mut R,
) -> TradeMatrix {
    let noise = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
    for &(i, j) in mask.pairs() {
        let mut v = individual.get(i, j);
        if rng.gen::<f64>() < rate {
            v += noise.sample(rng);
        }
        individual.set(i, j, v.clamp(0.0, thv));
    }
    individual
}

/// Mean entrywise Euclidean distance over all unordered pairs of individuals.
pub fn diversity(population: &[TradeMatrix]) -> f64 {
    let refs: Vec<&TradeMatrix> = population.iter().collect();
    diversity_refs(&refs)
}

fn diversity_refs(population: &[&TradeMatrix]) -> f64 {
    let p = population.len();
    if p < 2 {
        return 0.0;
    }
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|a| ((a + 1)..p).map(move |b| (a, b)))
        .collect();
    // Distances are computed in parallel but reduced sequentially in pair
    // order so the floating-point sum is independent of scheduling.
    let distances: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| population[a].distance(population[b]))
        .collect();
    distances.iter().sum::<f64>() / pairs.len() as f64
}

/// Splits the current diversity against the running maximum into exploration
/// and exploitation percentages; they always sum to 100.
pub fn exploration_split(diversity: f64, diversity_max: f64) -> (f64, f64) {
    if diversity_max == 0.0 {
        return (0.0, 100.0);
    }
    let exploration = 100.0 * diversity / diversity_max;
    let exploitation = 100.0 * (diversity - diversity_max).abs() / diversity_max;
    (exploration, exploitation)
}

/// Draws `pop_size` fresh random individuals against a fixed mask.
pub fn initial_population<R: Rng>(
    scenario: &Scenario,
    mask: &ValidityMask,
    pop_size: usize,
    rng: &mut R,
) -> Vec<TradeMatrix> {
    (0..pop_size)
        .map(|_| random_individual(scenario, mask, rng))
        .collect()
}

#[derive(Clone)]
struct Evaluated {
    trades: TradeMatrix,
    fit: FitnessBreakdown,
}

/// Runs the full optimizer on a scenario.
///
/// Seller strategies are resolved first (one coin per potential seller from
/// the run stream) for any microgrid still lacking a role, then the initial
/// population is drawn and the generation loop runs, all on the same stream.
pub fn evolve(scenario: &Scenario, config: &GaConfig) -> Result<EvolveResult> {
    config.validate()?;
    let mut scenario = scenario.clone();
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    scenario.assign_roles(&mut rng)?;
    let mask = ValidityMask::from_scenario(&scenario);
    let initial = initial_population(&scenario, &mask, config.pop_size, &mut rng);
    evolve_loop(scenario, config, &mask, initial, rng)
}

/// Runs the optimizer on a fixed, pre-built initial population.
///
/// Only the operators (parent picks, crossover blocks, mutation draws)
/// consume the seed, which isolates run-to-run variation from the starting
/// point. Roles must already be assigned.
pub fn evolve_from(
    scenario: &Scenario,
    config: &GaConfig,
    initial: Vec<TradeMatrix>,
) -> Result<EvolveResult> {
    config.validate()?;
    let scenario = scenario.clone();
    scenario.validate()?;
    if let Some(id) = scenario.first_unassigned() {
        return Err(Error::UnassignedRole { id });
    }
    if initial.len() != config.pop_size {
        return Err(Error::InvalidConfig(format!(
            "initial population has {} individuals, config expects {}",
            initial.len(),
            config.pop_size
        )));
    }
    if initial.iter().any(|m| m.n() != scenario.n()) {
        return Err(Error::InvalidConfig(
            "initial population size does not match the scenario".into(),
        ));
    }
    let mask = ValidityMask::from_scenario(&scenario);
    let rng = ChaCha8Rng::seed_from_u64(config.seed);
    evolve_loop(scenario, config, &mask, initial, rng)
}

fn evolve_loop(
    scenario: Scenario,
    config: &GaConfig,
    mask: &ValidityMask,
    initial: Vec<TradeMatrix>,
    mut rng: ChaCha8Rng,
) -> Result<EvolveResult> {
    let ceiling = f_max(&scenario, &config.weights)?;
    let score_all = |raw: Vec<TradeMatrix>| -> Result<Vec<Evaluated>> {
        raw.into_par_iter()
            .map(|m| {
                let adjusted = adjust_with_mask(&scenario, mask, &m, config.policy);
                let fit = evaluate_adjusted(&scenario, &adjusted, &config.weights, ceiling)?;
                Ok(Evaluated {
                    trades: adjusted,
                    fit,
                })
            })
            .collect()
    };

    let mut population = score_all(initial)?;
    let mut best = population[0].clone();
    for cand in &population[1..] {
        if cand.fit.score > best.fit.score {
            best = cand.clone();
        }
    }

    let mut stats = Vec::with_capacity(config.generations);
    let mut diversity_max = 0.0_f64;

    for g in 1..=config.generations {
        let rate = mutation_rate(g, config.generations, config.p_min)?;

        // Rank by score, ties by position: elites first, then the pool.
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| {
            population[b]
                .fit
                .score
                .total_cmp(&population[a].fit.score)
                .then(a.cmp(&b))
        });
        let elite = &order[..config.elite_size];
        // Parents come from the top of the whole population, elite included;
        // a pool drawn only from below the elite never breeds the best
        // individuals and the search stalls at the initial optimum.
        let pool = &order[..config.mating_pool_size.min(order.len())];

        let mut next: Vec<Evaluated> = elite.iter().map(|&i| population[i].clone()).collect();

        // Children are bred sequentially (the only consumers of the stream)
        // and scored as a batch afterwards.
        let mut offspring = Vec::with_capacity(config.pop_size - next.len());
        while next.len() + offspring.len() < config.pop_size {
            let p1 = &population[pool[rng.gen_range(0..pool.len())]].trades;
            let p2 = &population[pool[rng.gen_range(0..pool.len())]].trades;
            let child = crossover(p1, p2, &mut rng);
            let child = mutate(child, mask, rate, config.sigma, scenario.thv, &mut rng);
            offspring.push(child);
        }
        for child in score_all(offspring)? {
            if child.fit.score > best.fit.score {
                best = child.clone();
            }
            next.push(child);
        }
        population = next;
        debug_assert_eq!(population.len(), config.pop_size);

        let matrices: Vec<&TradeMatrix> = population.iter().map(|e| &e.trades).collect();
        let div = diversity_refs(&matrices);
        diversity_max = diversity_max.max(div);
        let (exploration_pct, exploitation_pct) = exploration_split(div, diversity_max);
        let mean_fitness =
            population.iter().map(|e| e.fit.score).sum::<f64>() / population.len() as f64;

        stats.push(GenerationStats {
            generation: g,
            best_fitness: best.fit.score,
            mean_fitness,
            diversity: div,
            mutation_rate: rate,
            exploration_pct,
            exploitation_pct,
            stable_count_best: best.fit.stable_count,
        });
    }

    Ok(EvolveResult {
        best: best.trades,
        best_breakdown: best.fit,
        stats,
        scenario,
    })
}

//! Single-objective engines: real-coded GA and Big Bang-Big Crunch, both under
//! Deb's feasibility rules.

use std::cmp::Ordering;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::base::{
    clamp, evaluate_population, random_init, stream_rng, Bounds, Evaluation, Genome, Individual, Population,
    Problem, Seed,
};
use crate::scalar::Real;
use crate::OptError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    pub pop_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub blx_alpha: f64,
    pub mutation_eta: f64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self { pop_size: 300, generations: 50, crossover_prob: 1.0, mutation_prob: 0.2, blx_alpha: 0.5, mutation_eta: 20.0 }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), OptError> {
        if self.pop_size < 2 {
            return Err(OptError::InvalidParams("GA population must be >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) || !(0.0..=1.0).contains(&self.mutation_prob) {
            return Err(OptError::InvalidParams("probabilities must lie in [0, 1]".into()));
        }
        if self.blx_alpha < 0.0 || self.mutation_eta <= 0.0 {
            return Err(OptError::InvalidParams("blx_alpha >= 0 and mutation_eta > 0 required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrunchMode {
    BestFit,
    WeightedCenter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BbbcParams {
    pub pop_size: usize,
    pub generations: usize,
    pub crunch_mode: CrunchMode,
    /// Multiplier on the bang spread `(upper − lower) / iteration`.
    pub bang_scale: f64,
}

impl Default for BbbcParams {
    fn default() -> Self {
        Self { pop_size: 300, generations: 50, crunch_mode: CrunchMode::BestFit, bang_scale: 0.2 }
    }
}

impl BbbcParams {
    pub fn validate(&self) -> Result<(), OptError> {
        if self.pop_size < 1 {
            return Err(OptError::InvalidParams("BBBC population must be >= 1".into()));
        }
        if !(self.bang_scale > 0.0) {
            return Err(OptError::InvalidParams("bang_scale must be > 0".into()));
        }
        Ok(())
    }
}

/// Per-generation trace of a run. Entry 0 is the initial population.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunHistory<T> {
    /// Best canonical objective (SOOP) or hypervolume of the rank-0 set (MOOP).
    pub best: Vec<T>,
    pub wall_seconds: Vec<f64>,
    /// Cumulative evaluation count after each entry.
    pub evaluations: Vec<u64>,
}

impl<T: Real> RunHistory<T> {
    pub fn push(&mut self, best: T, seconds: f64, evaluations: u64) {
        self.best.push(best);
        self.wall_seconds.push(seconds);
        self.evaluations.push(evaluations);
    }

    pub fn len(&self) -> usize {
        self.best.len()
    }

    pub fn is_empty(&self) -> bool {
        self.best.is_empty()
    }

    /// Total runtime RT in seconds.
    pub fn runtime(&self) -> f64 {
        self.wall_seconds.iter().sum()
    }

    pub fn total_evaluations(&self) -> u64 {
        self.evaluations.last().copied().unwrap_or(0)
    }
}

/// Deb's rules on evaluations. `Less` means `a` is better.
pub fn deb_compare_eval<T: Real>(a: &Evaluation<T>, b: &Evaluation<T>) -> Ordering {
    match (a.feasible, b.feasible) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => a.total_violation.total_order(&b.total_violation),
        (true, true) => a.objectives[0].total_order(&b.objectives[0]),
    }
}

pub fn deb_compare<T: Real>(a: &Individual<T>, b: &Individual<T>) -> Ordering {
    deb_compare_eval(a.eval(), b.eval())
}

/// Index of the Deb-best member; the lowest index wins ties.
pub fn deb_best<T: Real>(pop: &[Individual<T>]) -> Option<usize> {
    (0..pop.len()).reduce(|best, i| if deb_compare(&pop[i], &pop[best]) == Ordering::Less { i } else { best })
}

/// Draws two distinct members and returns the index of the comparator winner.
pub fn binary_tournament<T, F, R>(pop: &[Individual<T>], cmp: F, rng: &mut R) -> Result<usize, OptError>
where
    T: Real,
    F: Fn(&Individual<T>, &Individual<T>) -> Ordering,
    R: Rng + ?Sized,
{
    binary_tournament_by(pop.len(), |i, j| cmp(&pop[i], &pop[j]), rng)
}

/// Index-based tournament over `0..len`; ties are settled by a fair coin.
pub fn binary_tournament_by<F, R>(len: usize, cmp: F, rng: &mut R) -> Result<usize, OptError>
where
    F: Fn(usize, usize) -> Ordering,
    R: Rng + ?Sized,
{
    if len < 2 {
        return Err(OptError::PopulationTooSmall(len));
    }
    let i = rng.random_range(0..len);
    let mut j = rng.random_range(0..len - 1);
    if j >= i {
        j += 1;
    }
    Ok(match cmp(i, j) {
        Ordering::Less => i,
        Ordering::Greater => j,
        Ordering::Equal => {
            if rng.random_bool(0.5) {
                i
            } else {
                j
            }
        }
    })
}

/// BLX-α: each child coordinate uniform on [min − αd, max + αd], then clamped.
pub fn blx_alpha_crossover<T: Real, R: Rng + ?Sized>(
    p1: &[T],
    p2: &[T],
    alpha: f64,
    bounds: &Bounds<T>,
    rng: &mut R,
) -> (Genome<T>, Genome<T>) {
    let alpha = T::c(alpha);
    let mut c1 = Vec::with_capacity(p1.len());
    let mut c2 = Vec::with_capacity(p1.len());
    for i in 0..p1.len() {
        let lo = p1[i].min(p2[i]);
        let hi = p1[i].max(p2[i]);
        let d = hi - lo;
        let a = lo - alpha * d;
        let w = (hi + alpha * d) - a;
        for child in [&mut c1, &mut c2] {
            let u: f64 = rng.random();
            child.push(clamp(a + T::c(u) * w, bounds.lower[i], bounds.upper[i]));
        }
    }
    (c1, c2)
}

/// Bounded polynomial mutation with distribution index `eta`.
pub fn polynomial_mutation<T: Real, R: Rng + ?Sized>(
    genome: &[T],
    prob: f64,
    eta: f64,
    bounds: &Bounds<T>,
    rng: &mut R,
) -> Genome<T> {
    let mut out = genome.to_vec();
    for (i, y) in out.iter_mut().enumerate() {
        if prob <= 0.0 || !rng.random_bool(prob.min(1.0)) {
            continue;
        }
        let (yl, yu) = (bounds.lower[i].as_f64(), bounds.upper[i].as_f64());
        let yv = y.as_f64();
        let span = yu - yl;
        let d1 = (yv - yl) / span;
        let d2 = (yu - yv) / span;
        let r: f64 = rng.random();
        let mpow = 1.0 / (eta + 1.0);
        let dq = if r < 0.5 {
            let val = 2.0 * r + (1.0 - 2.0 * r) * (1.0 - d1).powf(eta + 1.0);
            val.powf(mpow) - 1.0
        } else {
            let val = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - val.powf(mpow)
        };
        *y = clamp(T::c(yv + dq * span), bounds.lower[i], bounds.upper[i]);
    }
    out
}

/// Best `mu` of parents ∪ offspring under Deb's rules, stable on ties.
pub fn elitist_survival<T: Real>(
    parents: Population<T>,
    offspring: Population<T>,
    mu: usize,
) -> Result<Population<T>, OptError> {
    let total = parents.len() + offspring.len();
    if mu > total {
        return Err(OptError::SurvivalOverflow { mu, total });
    }
    let mut all = parents;
    all.extend(offspring);
    all.sort_by(deb_compare);
    all.truncate(mu);
    Ok(all)
}

fn require_evaluated<T: Real>(pop: &[Individual<T>]) {
    debug_assert!(pop.iter().all(|i| i.evaluation.is_some()));
}

/// λ = |pop| offspring: two tournaments, BLX-α with `crossover_prob`, then
/// polynomial mutation. Pair k of generation g draws from its own stream.
pub(crate) fn ga_offspring<T, S>(
    pop: &[Individual<T>],
    params: &GaParams,
    bounds: &Bounds<T>,
    seed: Seed,
    generation: usize,
    select: S,
) -> Result<Population<T>, OptError>
where
    T: Real,
    S: Fn(&mut ChaCha8Rng) -> Result<usize, OptError>,
{
    let n = pop.len();
    let mut offspring = Vec::with_capacity(n + 1);
    for k in 0..n.div_ceil(2) {
        let mut rng = stream_rng(seed, generation as u64, k as u64);
        let a = &pop[select(&mut rng)?].genome;
        let b = &pop[select(&mut rng)?].genome;
        let (c1, c2) = if rng.random_bool(params.crossover_prob) {
            blx_alpha_crossover(a, b, params.blx_alpha, bounds, &mut rng)
        } else {
            (a.clone(), b.clone())
        };
        for c in [c1, c2] {
            let m = polynomial_mutation(&c, params.mutation_prob, params.mutation_eta, bounds, &mut rng);
            offspring.push(Individual::new(m, generation));
        }
    }
    offspring.truncate(n);
    Ok(offspring)
}

/// Algorithm 1: init, evaluate, then select/vary/evaluate/survive per generation.
pub fn run_ga<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    params: &GaParams,
    seed: Seed,
) -> Result<(Individual<T>, RunHistory<T>), OptError> {
    params.validate()?;
    let bounds = problem.bounds();
    let n = params.pop_size;
    let mut history = RunHistory::default();
    let t0 = Instant::now();
    let mut pop = random_init(bounds, n, seed)?;
    let mut evals = evaluate_population(&mut pop, problem) as u64;
    pop.sort_by(deb_compare);
    history.push(pop[0].eval().objectives[0], t0.elapsed().as_secs_f64(), evals);

    for g in 1..=params.generations {
        let t = Instant::now();
        let mut offspring =
            ga_offspring(&pop, params, bounds, seed, g, |rng| binary_tournament(&pop, deb_compare, rng))?;
        evals += evaluate_population(&mut offspring, problem) as u64;
        pop = elitist_survival(pop, offspring, n)?;
        require_evaluated(&pop);
        history.push(pop[0].eval().objectives[0], t.elapsed().as_secs_f64(), evals);
    }
    Ok((pop.swap_remove(0), history))
}

/// Center of mass of an evaluated population.
pub fn bbbc_crunch<T: Real>(pop: &[Individual<T>], mode: CrunchMode) -> Genome<T> {
    match mode {
        CrunchMode::BestFit => pop[deb_best(pop).expect("non-empty population")].genome.clone(),
        CrunchMode::WeightedCenter => weighted_center(pop),
    }
}

/// Fitness-weighted mean with weights ∝ 1/p. Feasible members use p = f;
/// infeasible members use p = worst feasible f + total violation, so they
/// always weigh less than any feasible member. Non-positive p are shifted.
fn weighted_center<T: Real>(pop: &[Individual<T>]) -> Genome<T> {
    let worst_feasible = pop
        .iter()
        .filter(|i| i.eval().feasible)
        .map(|i| i.eval().objectives[0].as_f64())
        .fold(f64::NEG_INFINITY, f64::max);
    let worst_feasible = if worst_feasible.is_finite() { worst_feasible } else { 0.0 };
    let mut p: Vec<f64> = pop
        .iter()
        .map(|i| {
            let e = i.eval();
            if e.feasible {
                e.objectives[0].as_f64()
            } else {
                worst_feasible + e.total_violation.as_f64()
            }
        })
        .collect();
    let min = p.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if max > min { max - min } else { 1.0 };
        for v in &mut p {
            *v += -min + span;
        }
    }
    let w: Vec<f64> = p.iter().map(|v| 1.0 / v).collect();
    let wsum: f64 = w.iter().sum();
    let dim = pop[0].genome.len();
    (0..dim)
        .map(|d| T::c(pop.iter().zip(&w).map(|(i, wi)| wi * i.genome[d].as_f64()).sum::<f64>() / wsum))
        .collect()
}

/// One bang sample: cm + N(0,1)·scale·(upper − lower)/iteration per coordinate, clamped.
pub fn bang_one<T: Real, R: Rng + ?Sized>(
    cm: &[T],
    iteration: usize,
    bounds: &Bounds<T>,
    scale: f64,
    rng: &mut R,
) -> Genome<T> {
    let it = T::c(iteration.max(1) as f64);
    cm.iter()
        .enumerate()
        .map(|(d, &c)| {
            let z: f64 = rng.sample(StandardNormal);
            clamp(c + T::c(z * scale) * bounds.width(d) / it, bounds.lower[d], bounds.upper[d])
        })
        .collect()
}

/// `n` bang samples around `cm` at the given iteration (iteration 1 is the random init).
pub fn bbbc_bang<T: Real, R: Rng + ?Sized>(
    cm: &[T],
    iteration: usize,
    bounds: &Bounds<T>,
    n: usize,
    scale: f64,
    rng: &mut R,
) -> Population<T> {
    (0..n).map(|_| Individual::new(bang_one(cm, iteration, bounds, scale, rng), iteration - 1)).collect()
}

/// Algorithm 2 with a best-ever archive of size one.
pub fn run_bbbc<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    params: &BbbcParams,
    seed: Seed,
) -> Result<(Individual<T>, RunHistory<T>), OptError> {
    params.validate()?;
    let bounds = problem.bounds();
    let n = params.pop_size;
    let mut history = RunHistory::default();
    let t0 = Instant::now();
    let mut pop = random_init(bounds, n, seed)?;
    let mut evals = evaluate_population(&mut pop, problem) as u64;
    let mut best = pop[deb_best(&pop).expect("non-empty")].clone();
    let mut cm = bbbc_crunch(&pop, params.crunch_mode);
    history.push(best.eval().objectives[0], t0.elapsed().as_secs_f64(), evals);

    for g in 1..=params.generations {
        let t = Instant::now();
        let iteration = g + 1;
        pop = (0..n)
            .map(|k| {
                let mut rng = stream_rng(seed, g as u64, k as u64);
                Individual::new(bang_one(&cm, iteration, bounds, params.bang_scale, &mut rng), g)
            })
            .collect();
        evals += evaluate_population(&mut pop, problem) as u64;
        let gen_best = &pop[deb_best(&pop).expect("non-empty")];
        if deb_compare(gen_best, &best) == Ordering::Less {
            best = gen_best.clone();
        }
        cm = bbbc_crunch(&pop, params.crunch_mode);
        history.push(best.eval().objectives[0], t.elapsed().as_secs_f64(), evals);
    }
    Ok((best, history))
}

//! Multi-objective machinery: constrained dominance, non-dominated sorting with
//! crowding (NS), strength-Pareto fitness with truncation (SP), and the four
//! engine × survival assemblies.

use std::cmp::Ordering;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::base::{evaluate_population, random_init, stream_rng, Evaluation, Individual, Population, Problem, Seed};
use crate::ea::{bang_one, binary_tournament_by, ga_offspring, BbbcParams, GaParams, RunHistory};
use crate::metrics::Normalization;
use crate::scalar::Real;
use crate::OptError;

/// Pareto dominance under minimization. Panics on length mismatch.
pub fn dominates<T: Real>(a: &[T], b: &[T]) -> bool {
    assert_eq!(a.len(), b.len(), "objective count mismatch");
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Feasible beats infeasible; infeasibles compare by total violation; feasibles by dominance.
pub fn constrained_dominates<T: Real>(a: &Evaluation<T>, b: &Evaluation<T>) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.total_violation < b.total_violation,
        (true, true) => dominates(&a.objectives, &b.objectives),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPopulation<T> {
    pub members: Population<T>,
    /// Front index, 0 for the first front.
    pub rank: Vec<usize>,
    /// Crowding distance (NS, larger is better) or SP fitness F (smaller is better).
    pub diversity: Vec<T>,
}

impl<T: Real> RankedPopulation<T> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn first_front(&self) -> Vec<&Individual<T>> {
        self.members.iter().zip(&self.rank).filter(|(_, &r)| r == 0).map(|(m, _)| m).collect()
    }
}

/// Fast non-dominated sort under constrained dominance; returns the front index per member.
pub fn nondominated_ranks<T: Real>(evals: &[&Evaluation<T>]) -> Vec<usize> {
    let n = evals.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if constrained_dominates(evals[i], evals[j]) {
                dominates_list[i].push(j);
                dominated_by[j] += 1;
            } else if constrained_dominates(evals[j], evals[i]) {
                dominates_list[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut rank = vec![usize::MAX; n];
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    let mut r = 0;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            rank[i] = r;
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        current = next;
        r += 1;
    }
    rank
}

/// Ranks plus per-front crowding distances.
pub fn nondominated_sort<T: Real>(pop: Population<T>) -> RankedPopulation<T> {
    let evals: Vec<&Evaluation<T>> = pop.iter().map(|m| m.eval()).collect();
    let rank = nondominated_ranks(&evals);
    let diversity = crowding_by_front(&evals, &rank);
    RankedPopulation { members: pop, rank, diversity }
}

fn fronts(rank: &[usize]) -> Vec<Vec<usize>> {
    let nfronts = rank.iter().copied().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); nfronts];
    for (i, &r) in rank.iter().enumerate() {
        out[r].push(i);
    }
    out
}

fn crowding_by_front<T: Real>(evals: &[&Evaluation<T>], rank: &[usize]) -> Vec<T> {
    let mut diversity = vec![T::zero(); evals.len()];
    for front in fronts(rank) {
        let objs: Vec<&[T]> = front.iter().map(|&i| evals[i].objectives.as_slice()).collect();
        for (k, d) in crowding_distance(&objs).into_iter().enumerate() {
            diversity[front[k]] = d;
        }
    }
    diversity
}

/// Crowding distance of each member of one front. Boundary members get +∞;
/// a zero-range objective contributes 0.
pub fn crowding_distance<T: Real>(front: &[&[T]]) -> Vec<T> {
    let n = front.len();
    if n <= 2 {
        return vec![T::infinity(); n];
    }
    let m = front[0].len();
    let mut dist = vec![T::zero(); n];
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        order.sort_by(|&a, &b| front[a][k].total_order(&front[b][k]).then(a.cmp(&b)));
        let lo = front[order[0]][k];
        let hi = front[order[n - 1]][k];
        dist[order[0]] = T::infinity();
        dist[order[n - 1]] = T::infinity();
        let range = hi - lo;
        if !(range > T::zero()) {
            continue;
        }
        for w in 1..n - 1 {
            let i = order[w];
            if dist[i].is_finite() {
                dist[i] += (front[order[w + 1]][k] - front[order[w - 1]][k]) / range;
            }
        }
    }
    dist
}

/// Fill by ascending front; split the last admitted front by descending crowding.
pub fn ns_survival<T: Real>(
    parents: Population<T>,
    offspring: Population<T>,
    mu: usize,
) -> Result<RankedPopulation<T>, OptError> {
    let total = parents.len() + offspring.len();
    if mu > total {
        return Err(OptError::SurvivalOverflow { mu, total });
    }
    let mut union = parents;
    union.extend(offspring);
    let ranked = nondominated_sort(union);
    let mut order: Vec<usize> = (0..ranked.len()).collect();
    order.sort_by(|&a, &b| {
        ranked.rank[a]
            .cmp(&ranked.rank[b])
            .then_with(|| ranked.diversity[b].total_order(&ranked.diversity[a]))
            .then(a.cmp(&b))
    });
    order.truncate(mu);
    order.sort_unstable();
    Ok(select(ranked, &order))
}

fn select<T: Real>(ranked: RankedPopulation<T>, keep: &[usize]) -> RankedPopulation<T> {
    let mut slots: Vec<Option<Individual<T>>> = ranked.members.into_iter().map(Some).collect();
    RankedPopulation {
        members: keep.iter().map(|&i| slots[i].take().expect("unique index")).collect(),
        rank: keep.iter().map(|&i| ranked.rank[i]).collect(),
        diversity: keep.iter().map(|&i| ranked.diversity[i]).collect(),
    }
}

/// Strength-Pareto quantities over one union.
#[derive(Debug, Clone, PartialEq)]
pub struct SpFitness<T> {
    /// S(i): number of members i constrained-dominates.
    pub strength: Vec<usize>,
    /// R(i): sum of S(j) over members j that constrained-dominate i.
    pub raw: Vec<usize>,
    /// D(i) = 1 / (σᵏ + 2).
    pub density: Vec<T>,
    /// F = R + D, plus 1 + normalized total violation for infeasible members.
    pub fitness: Vec<T>,
    /// k used for the k-th nearest neighbour.
    pub k: usize,
}

/// Pairwise Euclidean distances in union-normalized objective space.
fn normalized_distances<T: Real>(evals: &[&Evaluation<T>]) -> Vec<Vec<f64>> {
    let objs: Vec<Vec<T>> = evals.iter().map(|e| e.objectives.clone()).collect();
    let pts: Vec<Vec<f64>> = match Normalization::from_sets([objs.as_slice()]) {
        Some(norm) => objs.iter().map(|p| norm.apply(p).iter().map(|v| v.as_f64()).collect()).collect(),
        None => Vec::new(),
    };
    let n = pts.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

pub fn sp_fitness<T: Real>(evals: &[&Evaluation<T>]) -> SpFitness<T> {
    sp_fitness_with(evals, &normalized_distances(evals))
}

fn sp_fitness_with<T: Real>(evals: &[&Evaluation<T>], dist: &[Vec<f64>]) -> SpFitness<T> {
    let n = evals.len();
    let mut dom = vec![Vec::new(); n];
    let mut strength = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && constrained_dominates(evals[i], evals[j]) {
                dom[i].push(j);
                strength[i] += 1;
            }
        }
    }
    let mut raw = vec![0usize; n];
    for i in 0..n {
        for &j in &dom[i] {
            raw[j] += strength[i];
        }
    }
    let k = ((n as f64).sqrt().floor() as usize).max(1);
    let max_violation = evals.iter().map(|e| e.total_violation.as_f64()).fold(0.0, f64::max);
    let mut density = Vec::with_capacity(n);
    let mut fitness = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist[i][j]).collect();
        let sigma = if row.is_empty() {
            0.0
        } else {
            let kk = k.min(row.len()) - 1;
            *row.select_nth_unstable_by(kk, |a, b| a.total_cmp(b)).1
        };
        let d = 1.0 / (sigma + 2.0);
        let mut f = raw[i] as f64 + d;
        if !evals[i].feasible {
            let v = evals[i].total_violation.as_f64();
            f += 1.0 + if max_violation > 0.0 { v / max_violation } else { 0.0 };
        }
        density.push(T::c(d));
        fitness.push(T::c(f));
    }
    SpFitness { strength, raw, density, fitness, k }
}

/// Removes members one at a time, each time the one whose sorted distance list
/// to the remaining members is lexicographically smallest, until `mu` remain.
fn truncate(selected: &mut Vec<usize>, dist: &[Vec<f64>], mu: usize) {
    let n = dist.len();
    let mut alive = vec![false; n];
    for &i in selected.iter() {
        alive[i] = true;
    }
    // Sorted neighbour lists; removed neighbours are skipped lazily.
    let lists: Vec<Vec<usize>> = selected
        .iter()
        .map(|&i| {
            let mut l: Vec<usize> = selected.iter().copied().filter(|&j| j != i).collect();
            l.sort_by(|&a, &b| dist[i][a].total_cmp(&dist[i][b]).then(a.cmp(&b)));
            l
        })
        .collect();
    let mut heads = vec![0usize; lists.len()];
    let mut live: Vec<usize> = (0..selected.len()).collect();
    let cmp = |a: usize, b: usize, heads: &[usize], alive: &[bool]| -> Ordering {
        let (ia, ib) = (selected[a], selected[b]);
        let mut pa = lists[a][heads[a]..].iter().filter(|&&j| alive[j]).map(|&j| dist[ia][j]);
        let mut pb = lists[b][heads[b]..].iter().filter(|&&j| alive[j]).map(|&j| dist[ib][j]);
        loop {
            match (pa.next(), pb.next()) {
                (Some(x), Some(y)) => match x.total_cmp(&y) {
                    Ordering::Equal => continue,
                    o => return o,
                },
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (None, None) => return Ordering::Equal,
            }
        }
    };
    while live.len() > mu {
        for &c in &live {
            while heads[c] < lists[c].len() && !alive[lists[c][heads[c]]] {
                heads[c] += 1;
            }
        }
        let mut worst = 0;
        for w in 1..live.len() {
            if cmp(live[w], live[worst], &heads, &alive) == Ordering::Less {
                worst = w;
            }
        }
        let c = live.remove(worst);
        alive[selected[c]] = false;
    }
    *selected = live.iter().map(|&c| selected[c]).collect();
}

/// SPEA2-style environmental selection on parents ∪ offspring.
pub fn sp_survival<T: Real>(
    parents: Population<T>,
    offspring: Population<T>,
    mu: usize,
) -> Result<RankedPopulation<T>, OptError> {
    let total = parents.len() + offspring.len();
    if mu > total {
        return Err(OptError::SurvivalOverflow { mu, total });
    }
    let mut union = parents;
    union.extend(offspring);
    let evals: Vec<&Evaluation<T>> = union.iter().map(|m| m.eval()).collect();
    let dist = normalized_distances(&evals);
    let fit = sp_fitness_with(&evals, &dist);
    let mut keep: Vec<usize> = (0..union.len()).filter(|&i| fit.raw[i] == 0 && evals[i].feasible).collect();
    if keep.len() > mu {
        truncate(&mut keep, &dist, mu);
    } else if keep.len() < mu {
        let mut order: Vec<usize> = (0..union.len()).collect();
        order.sort_by(|&a, &b| fit.fitness[a].total_order(&fit.fitness[b]).then(a.cmp(&b)));
        order.truncate(mu);
        keep = order;
    }
    keep.sort_unstable();
    let diversity: Vec<T> = keep.iter().map(|&i| fit.fitness[i]).collect();
    let mut slots: Vec<Option<Individual<T>>> = union.into_iter().map(Some).collect();
    let members: Population<T> = keep.iter().map(|&i| slots[i].take().expect("unique")).collect();
    let rank = {
        let e: Vec<&Evaluation<T>> = members.iter().map(|m| m.eval()).collect();
        nondominated_ranks(&e)
    };
    Ok(RankedPopulation { members, rank, diversity })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Ga,
    Bbbc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Survival {
    Ns,
    Sp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MoeaParams {
    pub engine: Engine,
    pub survival: Survival,
    pub pop_size: usize,
    pub generations: usize,
    /// Variation settings for the GA engine; its size fields are ignored.
    pub ga: GaParams,
    /// Bang settings for the BBBC engine; its size and crunch fields are ignored.
    pub bbbc: BbbcParams,
}

impl Default for MoeaParams {
    fn default() -> Self {
        Self {
            engine: Engine::Ga,
            survival: Survival::Ns,
            pop_size: 300,
            generations: 100,
            ga: GaParams::default(),
            bbbc: BbbcParams::default(),
        }
    }
}

impl MoeaParams {
    pub fn new(engine: Engine, survival: Survival) -> Self {
        Self { engine, survival, ..Self::default() }
    }

    pub fn name(&self) -> &'static str {
        match (self.engine, self.survival) {
            (Engine::Ga, Survival::Ns) => "ga-ns",
            (Engine::Ga, Survival::Sp) => "ga-sp",
            (Engine::Bbbc, Survival::Ns) => "bbbc-ns",
            (Engine::Bbbc, Survival::Sp) => "bbbc-sp",
        }
    }

    pub fn validate(&self) -> Result<(), OptError> {
        if self.pop_size < 2 {
            return Err(OptError::InvalidParams("MOEA population must be >= 2".into()));
        }
        GaParams { pop_size: self.pop_size, ..self.ga }.validate()?;
        BbbcParams { pop_size: self.pop_size, ..self.bbbc }.validate()
    }
}

fn survive<T: Real>(
    survival: Survival,
    parents: Population<T>,
    offspring: Population<T>,
    mu: usize,
) -> Result<RankedPopulation<T>, OptError> {
    match survival {
        Survival::Ns => ns_survival(parents, offspring, mu),
        Survival::Sp => sp_survival(parents, offspring, mu),
    }
}

/// Constrained dominance first, then diversity, else tie.
fn moea_compare<T: Real>(ranked: &RankedPopulation<T>, survival: Survival, i: usize, j: usize) -> Ordering {
    let (a, b) = (ranked.members[i].eval(), ranked.members[j].eval());
    if constrained_dominates(a, b) {
        return Ordering::Less;
    }
    if constrained_dominates(b, a) {
        return Ordering::Greater;
    }
    let (da, db) = (ranked.diversity[i], ranked.diversity[j]);
    match survival {
        Survival::Ns => db.partial_cmp(&da).unwrap_or(Ordering::Equal),
        Survival::Sp => da.partial_cmp(&db).unwrap_or(Ordering::Equal),
    }
}

fn front_objectives<T: Real>(ranked: &RankedPopulation<T>) -> Vec<Vec<T>> {
    ranked.first_front().iter().map(|m| m.eval().objectives.clone()).collect()
}

/// Runs one of the four MOEAs. Returns the final rank-0 set and a history whose
/// `best` entries are hypervolumes of each generation's rank-0 set, normalized
/// over the union of all those sets.
pub fn run_moea<T: Real, P: Problem<T> + ?Sized>(
    problem: &P,
    params: &MoeaParams,
    seed: Seed,
) -> Result<(RankedPopulation<T>, RunHistory<T>), OptError> {
    params.validate()?;
    let bounds = problem.bounds();
    let n = params.pop_size;
    let mut fronts_per_gen: Vec<Vec<Vec<T>>> = Vec::with_capacity(params.generations + 1);
    let mut wall = Vec::with_capacity(params.generations + 1);
    let mut evals_trace = Vec::with_capacity(params.generations + 1);

    let t0 = Instant::now();
    let mut pop = random_init(bounds, n, seed)?;
    let mut evals = evaluate_population(&mut pop, problem) as u64;
    let mut ranked = survive(params.survival, pop, Vec::new(), n)?;
    fronts_per_gen.push(front_objectives(&ranked));
    wall.push(t0.elapsed().as_secs_f64());
    evals_trace.push(evals);

    for g in 1..=params.generations {
        let t = Instant::now();
        let mut offspring = match params.engine {
            Engine::Ga => ga_offspring(&ranked.members, &params.ga, bounds, seed, g, |rng| {
                binary_tournament_by(ranked.len(), |i, j| moea_compare(&ranked, params.survival, i, j), rng)
            })?,
            Engine::Bbbc => {
                let elite: Vec<usize> = (0..ranked.len()).filter(|&i| ranked.rank[i] == 0).collect();
                (0..n)
                    .map(|k| {
                        let mut rng = stream_rng(seed, g as u64, k as u64);
                        let center = &ranked.members[elite[rng.random_range(0..elite.len())]].genome;
                        Individual::new(bang_one(center, g + 1, bounds, params.bbbc.bang_scale, &mut rng), g)
                    })
                    .collect()
            }
        };
        evals += evaluate_population(&mut offspring, problem) as u64;
        ranked = survive(params.survival, ranked.members, offspring, n)?;
        fronts_per_gen.push(front_objectives(&ranked));
        wall.push(t.elapsed().as_secs_f64());
        evals_trace.push(evals);
    }

    let norm = Normalization::from_sets(fronts_per_gen.iter().map(|f| f.as_slice()));
    let mut history = RunHistory::default();
    for (k, front) in fronts_per_gen.iter().enumerate() {
        let hv = match &norm {
            Some(nm) => nm.hypervolume(front)?.value,
            None => T::zero(),
        };
        history.push(hv, wall[k], evals_trace[k]);
    }

    let keep: Vec<usize> = (0..ranked.len()).filter(|&i| ranked.rank[i] == 0).collect();
    Ok((select(ranked, &keep), history))
}

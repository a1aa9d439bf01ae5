//! Solutions, bounds, objective directions, evaluations and seeded batch evaluation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::OptError;

/// Violation stored on the solver slot when the plant cannot be evaluated.
pub const SENTINEL_VIOLATION: f64 = 1.0e6;

pub type Genome<T> = Vec<T>;
pub type Population<T> = Vec<Individual<T>>;
pub type Seed = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> Bounds<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self, OptError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(OptError::InvalidBounds("lower/upper length mismatch or empty".into()));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l < u) {
                return Err(OptError::InvalidBounds(format!("coordinate {i}: lower {l} >= upper {u}")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lower: T, upper: T) -> Result<Self, OptError> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, i: usize) -> T {
        self.upper[i] - self.lower[i]
    }

    pub fn midpoint(&self) -> Genome<T> {
        self.lower.iter().zip(&self.upper).map(|(&l, &u)| (l + u) / T::c(2.0)).collect()
    }

    /// Repairs a genome by clamping every coordinate to its interval.
    pub fn clamp(&self, genome: &mut [T]) {
        for (i, g) in genome.iter_mut().enumerate() {
            *g = clamp(*g, self.lower[i], self.upper[i]);
        }
    }

    pub fn contains(&self, genome: &[T]) -> bool {
        genome.len() == self.dim()
            && genome.iter().enumerate().all(|(i, g)| *g >= self.lower[i] && *g <= self.upper[i])
    }
}

#[inline]
pub fn clamp<T: Real>(v: T, lo: T, hi: T) -> T {
    if v.is_nan() {
        lo
    } else {
        v.max(lo).min(hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

/// Objective count and directions. Internally every objective is minimized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub directions: Vec<Direction>,
}

impl ObjectiveSpec {
    pub fn new(directions: Vec<Direction>) -> Self {
        assert!(!directions.is_empty(), "at least one objective");
        Self { directions }
    }

    pub fn minimize(count: usize) -> Self {
        Self::new(vec![Direction::Minimize; count])
    }

    pub fn count(&self) -> usize {
        self.directions.len()
    }

    /// Converts reported values to canonical (minimization) values.
    pub fn to_canonical<T: Real>(&self, reported: &[T]) -> Vec<T> {
        self.flip(reported)
    }

    /// Converts canonical values back to the reported orientation.
    pub fn to_reported<T: Real>(&self, canonical: &[T]) -> Vec<T> {
        self.flip(canonical)
    }

    fn flip<T: Real>(&self, v: &[T]) -> Vec<T> {
        v.iter()
            .zip(&self.directions)
            .map(|(&x, d)| match d {
                Direction::Minimize => x,
                Direction::Maximize => -x,
            })
            .collect()
    }
}

/// Result of evaluating one genome. `objectives` are canonical (minimized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation<T> {
    pub objectives: Vec<T>,
    /// Per-constraint violation magnitudes, 0 when satisfied.
    pub violations: Vec<T>,
    /// Sum of violations, each divided by its constraint scale.
    pub total_violation: T,
    pub aux: BTreeMap<String, T>,
    pub feasible: bool,
}

impl<T: Real> Evaluation<T> {
    /// Builds an evaluation; `scales` gives the bound magnitude of each constraint.
    pub fn new(objectives: Vec<T>, violations: Vec<T>, scales: &[T]) -> Self {
        assert_eq!(violations.len(), scales.len(), "one scale per constraint");
        let violations: Vec<T> = violations.into_iter().map(|v| if v > T::zero() { v } else { T::zero() }).collect();
        let total = violations
            .iter()
            .zip(scales)
            .fold(T::zero(), |acc, (&v, &s)| if v > T::zero() { acc + v / s.abs() } else { acc });
        let feasible = violations.iter().all(|v| *v == T::zero());
        Self { objectives, violations, total_violation: total, aux: BTreeMap::new(), feasible }
    }

    pub fn unconstrained(objectives: Vec<T>) -> Self {
        Self::new(objectives, Vec::new(), &[])
    }

    pub fn with_aux(mut self, aux: BTreeMap<String, T>) -> Self {
        self.aux = aux;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual<T> {
    pub genome: Genome<T>,
    pub evaluation: Option<Evaluation<T>>,
    /// Generation in which this genome was created (0 = initialization).
    pub born: usize,
}

impl<T: Real> Individual<T> {
    pub fn new(genome: Genome<T>, born: usize) -> Self {
        Self { genome, evaluation: None, born }
    }

    /// Panics when unevaluated; comparators never see unevaluated members.
    pub fn eval(&self) -> &Evaluation<T> {
        self.evaluation.as_ref().expect("individual compared before evaluation")
    }
}

/// Anything that maps a genome to an [`Evaluation`].
pub trait Problem<T: Real>: Sync {
    fn bounds(&self) -> &Bounds<T>;
    fn objectives(&self) -> &ObjectiveSpec;
    fn evaluate(&self, genome: &[T]) -> Evaluation<T>;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for one (generation, member) cell of a seeded run.
///
/// Every random draw of an engine goes through one of these, so serial and
/// parallel execution give identical results.
pub fn stream_rng(seed: Seed, generation: u64, member: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(splitmix64(seed) ^ generation) ^ member.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    ChaCha8Rng::seed_from_u64(key)
}

pub fn random_genome<T: Real, R: Rng + ?Sized>(bounds: &Bounds<T>, rng: &mut R) -> Genome<T> {
    (0..bounds.dim())
        .map(|i| {
            let u: f64 = rng.random();
            bounds.lower[i] + T::c(u) * bounds.width(i)
        })
        .collect()
}

/// `n` genomes drawn i.i.d. uniform per coordinate.
pub fn random_init<T: Real>(bounds: &Bounds<T>, n: usize, seed: Seed) -> Result<Population<T>, OptError> {
    Bounds::new(bounds.lower.clone(), bounds.upper.clone())?;
    if n == 0 {
        return Err(OptError::InvalidParams("population size must be >= 1".into()));
    }
    Ok((0..n)
        .map(|i| {
            let mut rng = stream_rng(seed, 0, i as u64);
            Individual::new(random_genome(bounds, &mut rng), 0)
        })
        .collect())
}

/// Evaluates every unevaluated member in parallel, preserving order.
/// Returns the number of evaluations performed.
pub fn evaluate_population<T: Real, P: Problem<T> + ?Sized>(pop: &mut [Individual<T>], problem: &P) -> usize {
    pop.par_iter_mut()
        .filter(|ind| ind.evaluation.is_none())
        .map(|ind| {
            ind.evaluation = Some(problem.evaluate(&ind.genome));
            1usize
        })
        .sum()
}

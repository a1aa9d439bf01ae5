//! Analytic test problems.

use crate::base::{Bounds, Evaluation, ObjectiveSpec, Problem};
use crate::scalar::Real;

/// Minimize the sum of squares on a symmetric box.
#[derive(Debug, Clone)]
pub struct Sphere<T> {
    bounds: Bounds<T>,
    spec: ObjectiveSpec,
}

impl<T: Real> Sphere<T> {
    pub fn new(dim: usize, half_width: T) -> Self {
        Self {
            bounds: Bounds::uniform(dim, -half_width, half_width).expect("positive half width"),
            spec: ObjectiveSpec::minimize(1),
        }
    }
}

impl<T: Real> Problem<T> for Sphere<T> {
    fn bounds(&self) -> &Bounds<T> {
        &self.bounds
    }
    fn objectives(&self) -> &ObjectiveSpec {
        &self.spec
    }
    fn evaluate(&self, genome: &[T]) -> Evaluation<T> {
        let f = genome.iter().fold(T::zero(), |a, &x| a + x * x);
        Evaluation::unconstrained(vec![f])
    }
}

/// Minimize (x², (x−2)²) for scalar x in [−2, 4]. Pareto set is x ∈ [0, 2].
#[derive(Debug, Clone)]
pub struct BiObjective<T> {
    bounds: Bounds<T>,
    spec: ObjectiveSpec,
}

impl<T: Real> Default for BiObjective<T> {
    fn default() -> Self {
        Self { bounds: Bounds::uniform(1, T::c(-2.0), T::c(4.0)).unwrap(), spec: ObjectiveSpec::minimize(2) }
    }
}

impl<T: Real> BiObjective<T> {
    /// Exact hypervolume of the analytic front after min-max normalization over
    /// the front itself (both objectives span [0, 4]) with reference `r` in each axis.
    ///
    /// In normalized coordinates the front is g = (1 − √f)², so the dominated
    /// area inside [0, r]² is r² − ∫₀¹ (1 − √f)² df = r² − 1/6.
    pub fn front_hypervolume(r: f64) -> f64 {
        r * r - 1.0 / 6.0
    }
}

impl<T: Real> Problem<T> for BiObjective<T> {
    fn bounds(&self) -> &Bounds<T> {
        &self.bounds
    }
    fn objectives(&self) -> &ObjectiveSpec {
        &self.spec
    }
    fn evaluate(&self, genome: &[T]) -> Evaluation<T> {
        let x = genome[0];
        let d = x - T::c(2.0);
        Evaluation::unconstrained(vec![x * x, d * d])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn front_hypervolume_matches_quadrature() {
        // Midpoint rule on the normalized front g = (1 - sqrt f)^2.
        let n = 200_000;
        let r = 1.1;
        let mut area = 0.0;
        for i in 0..n {
            let f = (i as f64 + 0.5) / n as f64;
            area += (r - (1.0 - f.sqrt()).powi(2)) / n as f64;
        }
        // plus the strip f in [1, r] which dominates up to g = 0
        area += (r - 1.0) * r;
        assert!((area - BiObjective::<f64>::front_hypervolume(r)).abs() < 1e-6);
    }
}

//! Constrained single- and multi-objective evolutionary optimization (GA, BBBC,
//! non-dominated sorting and strength-Pareto survival), quality metrics, and a
//! planar-linkage hand-exoskeleton design problem.
//!
//! All algorithms are generic over [`Real`]; `f64` aliases live at the crate root.

pub mod base;
pub mod benchmarks;
pub mod ea;
pub mod linkage;
pub mod metrics;
pub mod moea;
pub mod scalar;

pub use scalar::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptError {
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("population of size {0} is too small")]
    PopulationTooSmall(usize),
    #[error("cannot keep {mu} survivors out of {total}")]
    SurvivalOverflow { mu: usize, total: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("undefined: {0}")]
    Undefined(String),
}

pub type Bounds = base::Bounds<f64>;
pub type Evaluation = base::Evaluation<f64>;
pub type Individual = base::Individual<f64>;
pub type Population = base::Population<f64>;
pub type RunHistory = ea::RunHistory<f64>;

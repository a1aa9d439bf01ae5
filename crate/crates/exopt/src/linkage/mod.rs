//! Planar multi-loop linkage: position solver, finger sweeps, virtual-work
//! torques and the exoskeleton design problems built on them.

mod config;
mod solver;
mod uhex;

pub use config::{Constraint, FingerModel, Joint, MechanismConfig, Quantity, Segment, SolverSettings, SCHEMA_VERSION};
pub use solver::{Lu, Mechanism, PostureReport, PostureSolution, SweepSpec, TransmissionResult};
pub use uhex::{
    brute_force_grid, evaluate_uhex, grid_values, torque_ratio_distance, UhexMode, UhexProblem, AUX_KEYS, CONSTRAINT_SCALES,
    ACTUATOR_LIMIT, FIXED_SIX, LINK_NAMES, LOWER, SLIDER_LIMITS, TORQUE_RATIO_LIMIT, UPPER,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinkageError {
    #[error("invalid mechanism config: {0}")]
    Config(String),
    #[error("solver did not converge (residual {residual:e})")]
    NonConvergent { residual: f64 },
    #[error("solution jumped {jump} mm from the previous posture")]
    BranchFlip { jump: f64 },
    #[error("sweep step {step}: {source}")]
    Sweep {
        step: usize,
        #[source]
        source: Box<LinkageError>,
    },
}

impl LinkageError {
    pub fn at_step(self, step: usize) -> Self {
        match self {
            e @ LinkageError::Sweep { .. } => e,
            e => LinkageError::Sweep { step, source: Box::new(e) },
        }
    }
}

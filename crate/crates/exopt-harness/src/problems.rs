//! Problems the harness can instantiate from a config.

use std::time::Duration;

use exopt::base::{Bounds, Evaluation, ObjectiveSpec, Problem};
use exopt::benchmarks::{BiObjective, Sphere};
use exopt::linkage::{MechanismConfig, SweepSpec, UhexMode, UhexProblem, LINK_NAMES};

use crate::config::ProblemConfig;
use crate::external::ExternalProblem;
use crate::HarnessError;

#[derive(Debug)]
pub enum AnyProblem {
    Uhex(Box<UhexProblem<f64>>),
    Sphere(Sphere<f64>),
    BiObjective(BiObjective<f64>),
    External(ExternalProblem),
}

impl AnyProblem {
    pub fn build(cfg: &ProblemConfig) -> Result<Self, HarnessError> {
        Ok(match cfg {
            ProblemConfig::Uhex { mode, link_count, sweep_steps, mechanism } => {
                let config = match mechanism {
                    Some(path) => {
                        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
                        MechanismConfig::from_json(&text)?
                    }
                    None => MechanismConfig::uhex_surrogate(),
                };
                let sweep = SweepSpec::with_steps(*sweep_steps);
                AnyProblem::Uhex(Box::new(UhexProblem::with_config(config, *mode, *link_count, sweep)?))
            }
            ProblemConfig::Sphere { dim, half_width } => {
                if *dim == 0 || !(*half_width > 0.0) {
                    return Err(HarnessError::Config("sphere needs dim >= 1 and half_width > 0".into()));
                }
                AnyProblem::Sphere(Sphere::new(*dim, *half_width))
            }
            ProblemConfig::Biobjective => AnyProblem::BiObjective(BiObjective::default()),
            ProblemConfig::External { command, lower, upper, directions, constraints, constraint_scales, timeout_ms } => {
                let bounds = Bounds::new(lower.clone(), upper.clone())?;
                let scales = if constraint_scales.is_empty() { vec![1.0; *constraints] } else { constraint_scales.clone() };
                AnyProblem::External(ExternalProblem::new(
                    command.clone(),
                    bounds,
                    ObjectiveSpec::new(directions.clone()),
                    scales,
                    Duration::from_millis(*timeout_ms),
                )?)
            }
        })
    }

    pub fn genome_names(&self) -> Vec<String> {
        match self {
            AnyProblem::Uhex(p) => LINK_NAMES[..p.link_count()].iter().map(|s| s.to_string()).collect(),
            _ => (1..=self.bounds().dim()).map(|i| format!("x{i}")).collect(),
        }
    }

    pub fn objective_names(&self) -> Vec<String> {
        match self {
            AnyProblem::Uhex(p) if p.mode() == UhexMode::Moop => vec!["obj1".into(), "obj2".into(), "obj3".into()],
            AnyProblem::Uhex(_) => vec!["obj1".into()],
            AnyProblem::Sphere(_) => vec!["f".into()],
            AnyProblem::BiObjective(_) => vec!["f1".into(), "f2".into()],
            AnyProblem::External(_) => (1..=self.objectives().count()).map(|i| format!("obj{i}")).collect(),
        }
    }
}

impl Problem<f64> for AnyProblem {
    fn bounds(&self) -> &Bounds<f64> {
        match self {
            AnyProblem::Uhex(p) => p.bounds(),
            AnyProblem::Sphere(p) => p.bounds(),
            AnyProblem::BiObjective(p) => p.bounds(),
            AnyProblem::External(p) => p.bounds(),
        }
    }

    fn objectives(&self) -> &ObjectiveSpec {
        match self {
            AnyProblem::Uhex(p) => p.objectives(),
            AnyProblem::Sphere(p) => p.objectives(),
            AnyProblem::BiObjective(p) => p.objectives(),
            AnyProblem::External(p) => p.objectives(),
        }
    }

    fn evaluate(&self, genome: &[f64]) -> Evaluation<f64> {
        match self {
            AnyProblem::Uhex(p) => p.evaluate(genome),
            AnyProblem::Sphere(p) => p.evaluate(genome),
            AnyProblem::BiObjective(p) => p.evaluate(genome),
            AnyProblem::External(p) => p.evaluate(genome),
        }
    }
}

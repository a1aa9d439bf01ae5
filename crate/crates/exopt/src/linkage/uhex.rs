//! Exoskeleton link-length design problems on the surrogate linkage.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::MechanismConfig;
use super::solver::{Mechanism, PostureSolution, SweepSpec, TransmissionResult};
use super::LinkageError;
use crate::base::{Bounds, Direction, Evaluation, Individual, ObjectiveSpec, Problem, SENTINEL_VIOLATION};
use crate::ea::deb_best;
use crate::scalar::Real;
use crate::OptError;

/// Decision variables in genome order.
pub const LINK_NAMES: [&str; 9] = ["BC", "CD", "DE", "EF", "FG", "GH", "BK", "CI", "EJ"];
pub const LOWER: [f64; 9] = [38.0, 10.0, 15.0, 15.0, 27.0, 64.0, 20.0, 10.0, 20.0];
pub const UPPER: [f64; 9] = [60.0, 30.0, 51.0, 51.0, 56.0, 100.0, 50.0, 17.0, 50.0];
/// BK, CI, EJ in the six-variable problem.
pub const FIXED_SIX: [f64; 3] = [37.0, 16.0, 37.0];
/// Slider travel limits (c₁ max, c₂ max) in mm.
pub const SLIDER_LIMITS: [f64; 2] = [35.0, 45.0];
pub const TORQUE_RATIO_LIMIT: f64 = 15.0;
pub const ACTUATOR_LIMIT: f64 = 50.0;
/// Normalization of c₁ ≥ 0, c₁ ≤ 35, c₂ ≥ 0, c₂ ≤ 45, ratio ≥ 1/15, ratio ≤ 15, L_x ≤ 50, solver.
pub const CONSTRAINT_SCALES: [f64; 8] = [35.0, 35.0, 45.0, 45.0, 1.0 / 15.0, 15.0, 50.0, 1.0];
pub const AUX_KEYS: [&str; 10] =
    ["Lx", "c1_max", "c1_min", "c1_range", "c2_max", "c2_min", "c2_range", "solved", "tau_mcp", "tau_pip"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UhexMode {
    /// Maximize transmission under slider and torque-ratio limits.
    Soop,
    /// As `Soop` plus the actuator stroke limit.
    SoopCon7,
    /// Transmission, torque balance and stroke as three objectives under slider limits.
    Moop,
}

impl UhexMode {
    pub fn name(self) -> &'static str {
        match self {
            UhexMode::Soop => "soop",
            UhexMode::SoopCon7 => "soop_con7",
            UhexMode::Moop => "moop",
        }
    }

    /// Constraint slots in order, the last one being the solver slot.
    pub fn constraint_slots(self) -> &'static [usize] {
        match self {
            UhexMode::Soop => &[0, 1, 2, 3, 4, 5, 7],
            UhexMode::SoopCon7 => &[0, 1, 2, 3, 4, 5, 6, 7],
            UhexMode::Moop => &[0, 1, 2, 3, 7],
        }
    }
}

impl std::str::FromStr for UhexMode {
    type Err = OptError;
    fn from_str(s: &str) -> Result<Self, OptError> {
        match s {
            "soop" => Ok(UhexMode::Soop),
            "soop_con7" => Ok(UhexMode::SoopCon7),
            "moop" => Ok(UhexMode::Moop),
            other => Err(OptError::InvalidParams(format!("unknown uhex mode {other}"))),
        }
    }
}

/// Distance of the torque ratio from 1, taken on whichever side of 1 it lies.
pub fn torque_ratio_distance(tau_mcp: f64, tau_pip: f64) -> f64 {
    let (hi, lo) = if tau_mcp >= tau_pip { (tau_mcp, tau_pip) } else { (tau_pip, tau_mcp) };
    if lo > 0.0 {
        (hi / lo - 1.0).abs()
    } else {
        f64::INFINITY
    }
}

/// Evenly spaced values over `[lo, hi]` including both ends; one value means the midpoint.
pub fn grid_values(lo: f64, hi: f64, resolution: usize) -> Vec<f64> {
    match resolution {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        r => (0..r).map(|i| lo + (hi - lo) * i as f64 / (r - 1) as f64).collect(),
    }
}

/// The link-length design problem evaluated on a [`Mechanism`].
#[derive(Debug, Clone)]
pub struct UhexProblem<T: Real> {
    mechanism: Mechanism<T>,
    reference: PostureSolution<T>,
    reference_links: Vec<T>,
    mode: UhexMode,
    link_count: usize,
    sweep: SweepSpec,
    bounds: Bounds<T>,
    objectives: ObjectiveSpec,
}

impl<T: Real> UhexProblem<T> {
    /// Problem on the bundled surrogate linkage with the default sweep.
    pub fn new(mode: UhexMode, link_count: usize) -> Result<Self, LinkageError> {
        Self::with_config(MechanismConfig::uhex_surrogate(), mode, link_count, SweepSpec::default())
    }

    pub fn with_sweep(mode: UhexMode, link_count: usize, sweep: SweepSpec) -> Result<Self, LinkageError> {
        Self::with_config(MechanismConfig::uhex_surrogate(), mode, link_count, sweep)
    }

    pub fn with_config(
        config: MechanismConfig,
        mode: UhexMode,
        link_count: usize,
        sweep: SweepSpec,
    ) -> Result<Self, LinkageError> {
        if link_count != 6 && link_count != 9 {
            return Err(LinkageError::Config(format!("link_count must be 6 or 9, got {link_count}")));
        }
        if config.links.iter().map(String::as_str).ne(LINK_NAMES.iter().copied()) {
            return Err(LinkageError::Config(format!("config links must be {LINK_NAMES:?}")));
        }
        if config.actuator.is_none() || config.sliders.len() != 2 {
            return Err(LinkageError::Config("config needs an actuator and two sliders".into()));
        }
        let mechanism = Mechanism::new(config)?;
        let reference = mechanism.reference_solution()?;
        let reference_links = mechanism.config.reference_links()?.into_iter().map(T::c).collect();
        let bounds = Bounds::new(
            LOWER[..link_count].iter().map(|&v| T::c(v)).collect(),
            UPPER[..link_count].iter().map(|&v| T::c(v)).collect(),
        )
        .map_err(|e| LinkageError::Config(e.to_string()))?;
        let objectives = match mode {
            UhexMode::Moop => ObjectiveSpec::new(vec![Direction::Maximize, Direction::Minimize, Direction::Minimize]),
            _ => ObjectiveSpec::new(vec![Direction::Maximize]),
        };
        Ok(Self { mechanism, reference, reference_links, mode, link_count, sweep, bounds, objectives })
    }

    pub fn mode(&self) -> UhexMode {
        self.mode
    }

    pub fn link_count(&self) -> usize {
        self.link_count
    }

    pub fn sweep(&self) -> &SweepSpec {
        &self.sweep
    }

    pub fn mechanism(&self) -> &Mechanism<T> {
        &self.mechanism
    }

    /// All nine link lengths for a genome of the configured length.
    pub fn full_links(&self, genome: &[T]) -> Vec<T> {
        let mut links = genome.to_vec();
        if self.link_count == 6 {
            links.extend(FIXED_SIX.iter().map(|&v| T::c(v)));
        }
        links
    }

    /// Assembles the genome at the open posture and sweeps it.
    pub fn transmission(&self, genome: &[T]) -> Result<TransmissionResult<T>, LinkageError> {
        if genome.len() != self.link_count {
            return Err(LinkageError::Config(format!("expected {} links, got {}", self.link_count, genome.len())));
        }
        let links = self.full_links(genome);
        let start = self.mechanism.assemble(&self.reference, &self.reference_links, &links)?;
        self.mechanism.sweep_transmission(&links, &self.sweep, &start)
    }

    fn sentinel(&self) -> Evaluation<T> {
        let slots = self.mode.constraint_slots();
        let mut violations = vec![T::zero(); slots.len()];
        *violations.last_mut().expect("solver slot") = T::c(SENTINEL_VIOLATION);
        let scales: Vec<T> = slots.iter().map(|&s| T::c(CONSTRAINT_SCALES[s])).collect();
        let objectives = match self.mode {
            UhexMode::Moop => vec![T::zero(), T::c(SENTINEL_VIOLATION), T::c(SENTINEL_VIOLATION)],
            _ => vec![T::zero()],
        };
        let mut aux = BTreeMap::new();
        aux.insert("solved".to_string(), T::zero());
        Evaluation::new(objectives, violations, &scales).with_aux(aux)
    }

    /// Objectives and constraints from a completed sweep.
    pub fn score(&self, t: &TransmissionResult<T>) -> Evaluation<T> {
        let tm = t.tau_mcp_mean.as_f64();
        let tp = t.tau_pip_mean.as_f64();
        let lx = t.lx.as_f64();
        let (c1min, c1max) = (t.slider_min[0].as_f64(), t.slider_max[0].as_f64());
        let (c2min, c2max) = (t.slider_min[1].as_f64(), t.slider_max[1].as_f64());
        let ratio = if tp > 0.0 { tm / tp } else { f64::INFINITY };
        let all = [
            -c1min,
            c1max - SLIDER_LIMITS[0],
            -c2min,
            c2max - SLIDER_LIMITS[1],
            (1.0 / TORQUE_RATIO_LIMIT - ratio).min(SENTINEL_VIOLATION),
            (ratio - TORQUE_RATIO_LIMIT).min(SENTINEL_VIOLATION),
            lx - ACTUATOR_LIMIT,
            0.0,
        ];
        let slots = self.mode.constraint_slots();
        let violations: Vec<T> = slots.iter().map(|&s| T::c(all[s])).collect();
        let scales: Vec<T> = slots.iter().map(|&s| T::c(CONSTRAINT_SCALES[s])).collect();
        let obj1 = (tm + tp).sqrt();
        let reported = match self.mode {
            UhexMode::Moop => vec![obj1, torque_ratio_distance(tm, tp).min(SENTINEL_VIOLATION), lx],
            _ => vec![obj1],
        };
        let canonical = self.objectives.to_canonical(&reported.into_iter().map(T::c).collect::<Vec<T>>());
        let aux_values = [lx, c1max, c1min, c1max - c1min, c2max, c2min, c2max - c2min, 1.0, tm, tp];
        let aux = AUX_KEYS.iter().zip(aux_values).map(|(k, v)| (k.to_string(), T::c(v))).collect();
        Evaluation::new(canonical, violations, &scales).with_aux(aux)
    }
}

impl<T: Real> Problem<T> for UhexProblem<T> {
    fn bounds(&self) -> &Bounds<T> {
        &self.bounds
    }

    fn objectives(&self) -> &ObjectiveSpec {
        &self.objectives
    }

    fn evaluate(&self, genome: &[T]) -> Evaluation<T> {
        match self.transmission(genome) {
            Ok(t) => self.score(&t),
            Err(_) => self.sentinel(),
        }
    }
}

/// One-shot evaluation on the bundled surrogate with the default sweep.
pub fn evaluate_uhex(lengths: &[f64], mode: UhexMode, link_count: usize) -> Result<Evaluation<f64>, LinkageError> {
    let problem = UhexProblem::<f64>::new(mode, link_count)?;
    Ok(problem.evaluate(lengths))
}

/// Exhaustive search over the uniform grid with `resolution` values per axis.
pub fn brute_force_grid<T: Real>(problem: &UhexProblem<T>, resolution: usize) -> Result<Individual<T>, OptError> {
    if resolution == 0 {
        return Err(OptError::InvalidParams("resolution must be at least 1".into()));
    }
    let bounds = problem.bounds();
    let axes: Vec<Vec<f64>> = (0..bounds.dim())
        .map(|i| grid_values(bounds.lower[i].as_f64(), bounds.upper[i].as_f64(), resolution))
        .collect();
    let total = resolution
        .checked_pow(bounds.dim() as u32)
        .ok_or_else(|| OptError::InvalidParams("grid too large".into()))?;
    let members: Vec<Individual<T>> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut genome = Vec::with_capacity(axes.len());
            for axis in axes.iter().rev() {
                genome.push(T::c(axis[idx % resolution]));
                idx /= resolution;
            }
            genome.reverse();
            let evaluation = problem.evaluate(&genome);
            Individual { genome, evaluation: Some(evaluation), born: 0 }
        })
        .collect();
    let best = deb_best(&members).expect("grid is non-empty");
    Ok(members.into_iter().nth(best).expect("index in range"))
}

//! Experiment configuration: a versioned JSON document plus CLI overrides.

use std::path::{Path, PathBuf};

use exopt::base::Direction;
use exopt::ea::{BbbcParams, GaParams};
use exopt::linkage::UhexMode;
use exopt::metrics::{MOOP_GC_MARGIN, MOOP_GC_WINDOW, SOOP_GC_MARGIN, SOOP_GC_WINDOW};
use exopt::moea::{Engine, MoeaParams, Survival};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemConfig {
    Uhex {
        mode: UhexMode,
        #[serde(default = "default_link_count")]
        link_count: usize,
        #[serde(default = "default_sweep_steps")]
        sweep_steps: usize,
        /// Optional replacement mechanism file.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mechanism: Option<PathBuf>,
    },
    Sphere {
        #[serde(default = "default_sphere_dim")]
        dim: usize,
        #[serde(default = "default_half_width")]
        half_width: f64,
    },
    Biobjective,
    External {
        command: Vec<String>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        directions: Vec<Direction>,
        #[serde(default)]
        constraints: usize,
        #[serde(default)]
        constraint_scales: Vec<f64>,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
}

fn default_link_count() -> usize {
    9
}
fn default_sweep_steps() -> usize {
    100
}
fn default_sphere_dim() -> usize {
    5
}
fn default_half_width() -> f64 {
    5.0
}
fn default_timeout_ms() -> u64 {
    10_000
}

impl ProblemConfig {
    pub fn name(&self) -> String {
        match self {
            ProblemConfig::Uhex { mode, link_count, sweep_steps, mechanism } => {
                let custom = if mechanism.is_some() { "-custom" } else { "" };
                format!("uhex-{}-{link_count}-s{sweep_steps}{custom}", mode.name())
            }
            ProblemConfig::Sphere { dim, .. } => format!("sphere-{dim}"),
            ProblemConfig::Biobjective => "biobjective".into(),
            ProblemConfig::External { .. } => "external".into(),
        }
    }

    pub fn objective_count(&self) -> usize {
        match self {
            ProblemConfig::Uhex { mode: UhexMode::Moop, .. } => 3,
            ProblemConfig::Uhex { .. } | ProblemConfig::Sphere { .. } => 1,
            ProblemConfig::Biobjective => 2,
            ProblemConfig::External { directions, .. } => directions.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GcRule {
    pub window: usize,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub problem: ProblemConfig,
    pub algorithm: Engine,
    /// `None` runs the single-objective engine; `ns`/`sp` run the MOEA.
    #[serde(default)]
    pub survival: Option<Survival>,
    /// Overrides the population of whichever engine runs.
    #[serde(default)]
    pub pop_size: Option<usize>,
    /// Overrides the generation count (defaults: 50 single-objective, 100 MOEA).
    #[serde(default)]
    pub generations: Option<usize>,
    #[serde(default)]
    pub ga: GaParams,
    #[serde(default)]
    pub bbbc: BbbcParams,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub gc: Option<GcRule>,
}

fn default_repetitions() -> usize {
    10
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn new(problem: ProblemConfig, algorithm: Engine, survival: Option<Survival>) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            problem,
            algorithm,
            survival,
            pop_size: None,
            generations: None,
            ga: GaParams::default(),
            bbbc: BbbcParams::default(),
            repetitions: default_repetitions(),
            seed: 0,
            output_dir: default_output_dir(),
            gc: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.repetitions < 1 {
            return Err(HarnessError::Config("repetitions must be >= 1".into()));
        }
        let m = self.problem.objective_count();
        if m == 0 {
            return Err(HarnessError::Config("problem needs at least one objective".into()));
        }
        if self.survival.is_none() && m > 1 {
            return Err(HarnessError::Config(format!("{m}-objective problem needs a survival strategy (ns or sp)")));
        }
        if let ProblemConfig::External { command, lower, upper, constraints, constraint_scales, .. } = &self.problem {
            if command.is_empty() {
                return Err(HarnessError::Config("external problem needs a command".into()));
            }
            if lower.len() != upper.len() || lower.is_empty() {
                return Err(HarnessError::Config("external bounds must be non-empty and of equal length".into()));
            }
            if !constraint_scales.is_empty() && constraint_scales.len() != *constraints {
                return Err(HarnessError::Config("one constraint scale per constraint".into()));
            }
        }
        match self.survival {
            None => match self.algorithm {
                Engine::Ga => self.ga_params().validate()?,
                Engine::Bbbc => self.bbbc_params().validate()?,
            },
            Some(_) => self.moea_params().validate()?,
        }
        Ok(())
    }

    pub fn is_moea(&self) -> bool {
        self.survival.is_some()
    }

    pub fn algorithm_name(&self) -> &'static str {
        match self.survival {
            None => match self.algorithm {
                Engine::Ga => "ga",
                Engine::Bbbc => "bbbc",
            },
            Some(s) => MoeaParams::new(self.algorithm, s).name(),
        }
    }

    pub fn ga_params(&self) -> GaParams {
        GaParams {
            pop_size: self.pop_size.unwrap_or(self.ga.pop_size),
            generations: self.generations.unwrap_or(self.ga.generations),
            ..self.ga
        }
    }

    pub fn bbbc_params(&self) -> BbbcParams {
        BbbcParams {
            pop_size: self.pop_size.unwrap_or(self.bbbc.pop_size),
            generations: self.generations.unwrap_or(self.bbbc.generations),
            ..self.bbbc
        }
    }

    pub fn moea_params(&self) -> MoeaParams {
        let defaults = MoeaParams::default();
        MoeaParams {
            engine: self.algorithm,
            survival: self.survival.unwrap_or(Survival::Ns),
            pop_size: self.pop_size.unwrap_or(defaults.pop_size),
            generations: self.generations.unwrap_or(defaults.generations),
            ga: self.ga,
            bbbc: self.bbbc,
        }
    }

    pub fn gc_rule(&self) -> GcRule {
        self.gc.unwrap_or(if self.is_moea() {
            GcRule { window: MOOP_GC_WINDOW, margin: MOOP_GC_MARGIN }
        } else {
            GcRule { window: SOOP_GC_WINDOW, margin: SOOP_GC_MARGIN }
        })
    }
}

/// Command-line values that replace fields of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub problem: Option<String>,
    pub mode: Option<UhexMode>,
    pub link_count: Option<usize>,
    pub sweep_steps: Option<usize>,
    pub algorithm: Option<Engine>,
    pub survival: Option<Option<Survival>>,
    pub generations: Option<usize>,
    pub pop_size: Option<usize>,
    pub repetitions: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub external_command: Option<Vec<String>>,
}

impl Overrides {
    /// Applies the overrides; `base` may be absent when every required field is given.
    pub fn apply(self, base: Option<ExperimentConfig>) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match base {
            Some(c) => c,
            None => {
                let problem = match self.problem.as_deref() {
                    Some(_) => ProblemConfig::Sphere { dim: default_sphere_dim(), half_width: default_half_width() },
                    None => return Err(HarnessError::Config("either --config or --problem is required".into())),
                };
                ExperimentConfig::new(problem, Engine::Ga, None)
            }
        };
        if let Some(name) = self.problem.as_deref() {
            cfg.problem = match name {
                "uhex" => match &cfg.problem {
                    p @ ProblemConfig::Uhex { .. } => p.clone(),
                    _ => ProblemConfig::Uhex {
                        mode: UhexMode::Soop,
                        link_count: default_link_count(),
                        sweep_steps: default_sweep_steps(),
                        mechanism: None,
                    },
                },
                "sphere" => match &cfg.problem {
                    p @ ProblemConfig::Sphere { .. } => p.clone(),
                    _ => ProblemConfig::Sphere { dim: default_sphere_dim(), half_width: default_half_width() },
                },
                "biobjective" => ProblemConfig::Biobjective,
                "external" => match &cfg.problem {
                    p @ ProblemConfig::External { .. } => p.clone(),
                    _ => return Err(HarnessError::Config("external problem needs bounds from a config file".into())),
                },
                other => return Err(HarnessError::Config(format!("unknown problem {other}"))),
            };
        }
        if let ProblemConfig::Uhex { mode, link_count, sweep_steps, .. } = &mut cfg.problem {
            if let Some(m) = self.mode {
                *mode = m;
            }
            if let Some(l) = self.link_count {
                *link_count = l;
            }
            if let Some(s) = self.sweep_steps {
                *sweep_steps = s;
            }
        } else if self.mode.is_some() || self.link_count.is_some() || self.sweep_steps.is_some() {
            return Err(HarnessError::Config("mode, link-count and sweep-steps apply to the uhex problem only".into()));
        }
        if let Some(cmd) = self.external_command {
            match &mut cfg.problem {
                ProblemConfig::External { command, .. } => *command = cmd,
                _ => return Err(HarnessError::Config("--external-evaluator needs an external problem".into())),
            }
        }
        if let Some(a) = self.algorithm {
            cfg.algorithm = a;
        }
        if let Some(s) = self.survival {
            cfg.survival = s;
        }
        if self.generations.is_some() {
            cfg.generations = self.generations;
        }
        if self.pop_size.is_some() {
            cfg.pop_size = self.pop_size;
        }
        if let Some(r) = self.repetitions {
            cfg.repetitions = r;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = self.output_dir {
            cfg.output_dir = d;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

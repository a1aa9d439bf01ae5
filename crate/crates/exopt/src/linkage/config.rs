//! JSON-loadable mechanism description.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::LinkageError;

pub const SCHEMA_VERSION: u32 = 1;

/// A scalar that is either a literal or a name resolved against the
/// mechanism's unknown parameters, genome links, then fixed lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Value(f64),
    Name(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Proximal,
    Middle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Joint {
    Mcp,
    Pip,
}

/// Loop-closure building blocks. Each contributes one or two scalar equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Constraint {
    /// |a − b| = length.
    Distance { a: String, b: String, length: Quantity },
    /// point = base + length · R(angle) · unit(to − from); a rigid offset such as a 90° elbow.
    Offset { point: String, base: String, from: String, to: String, length: Quantity, angle_deg: f64 },
    /// point = origin + param · direction (prismatic joint).
    Line { point: String, origin: String, direction: [f64; 2], param: String },
    /// point = segment origin + along · axis + normal · normal-vector, in the finger frame.
    Finger { point: String, segment: Segment, along: Quantity, normal: Quantity },
    /// param = offset + radius · θ_joint (rack and pinion on a finger joint).
    Rack { param: String, joint: Joint, radius: Quantity, offset: Quantity },
}

/// Two-segment finger in the mechanism plane. Segment angles are
/// `rest + sign·θ_MCP` and `rest + sign·(θ_MCP + θ_PIP)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FingerModel {
    pub proximal: f64,
    pub middle: f64,
    pub mcp: [f64; 2],
    pub rest_angle_deg: f64,
    pub flexion_sign: f64,
}

impl Default for FingerModel {
    fn default() -> Self {
        Self { proximal: 45.0, middle: 25.0, mcp: [0.0, 0.0], rest_angle_deg: 0.0, flexion_sign: -1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Residual norm (mm) at which a posture is accepted.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Largest coordinate change (mm) allowed between neighbouring sweep steps.
    pub max_step: f64,
    /// Length-continuation substeps from the reference assembly to a genome.
    pub continuation_steps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_iterations: 100, max_step: 15.0, continuation_steps: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    pub schema_version: u32,
    pub name: String,
    /// Genome variables, in genome order.
    pub links: Vec<String>,
    /// Named constant lengths.
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    /// Link values of the reference assembly described by the guesses below.
    #[serde(default)]
    pub reference: BTreeMap<String, f64>,
    #[serde(default)]
    pub finger: FingerModel,
    pub ground: BTreeMap<String, [f64; 2]>,
    /// Free points with their coordinates in the reference assembly.
    pub points: BTreeMap<String, [f64; 2]>,
    /// Free scalars (slider travels, actuator length) with reference values.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub constraints: Vec<Constraint>,
    /// Points whose distance is the actuator length |OA|.
    #[serde(default)]
    pub actuator: Option<[String; 2]>,
    /// Params reported as finger slider travels.
    #[serde(default)]
    pub sliders: Vec<String>,
    #[serde(default)]
    pub solver: SolverSettings,
}

impl MechanismConfig {
    pub fn from_json(text: &str) -> Result<Self, LinkageError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| LinkageError::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(LinkageError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Surrogate exoskeleton linkage shipped with the crate.
    pub fn uhex_surrogate() -> Self {
        Self::from_json(include_str!("uhex_surrogate.json")).expect("bundled config is valid")
    }

    /// Reference link values in genome order.
    pub fn reference_links(&self) -> Result<Vec<f64>, LinkageError> {
        self.links
            .iter()
            .map(|n| self.reference.get(n).copied().ok_or_else(|| LinkageError::Config(format!("no reference value for {n}"))))
            .collect()
    }
}

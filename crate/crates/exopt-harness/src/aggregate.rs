//! Cross-run union of final sets, reduced to its non-dominated subset.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use exopt::base::{Direction, ObjectiveSpec};
use exopt::moea::dominates;
use serde::{Deserialize, Serialize};

use crate::runner::RunRecord;
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Provenance {
    pub algorithm: String,
    pub run: usize,
    pub seed: u64,
    pub generation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMember {
    pub genome: Vec<f64>,
    /// Reported orientation.
    pub objectives: Vec<f64>,
    pub aux: BTreeMap<String, f64>,
    /// Every run that produced this objective vector, sorted.
    pub provenance: Vec<Provenance>,
}

impl AggregateMember {
    /// Run index of the first provenance entry, used for tie-breaking.
    pub fn first_run(&self) -> usize {
        self.provenance.first().map(|p| p.run).unwrap_or(usize::MAX)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondominatedSet {
    pub problem: String,
    pub genome_names: Vec<String>,
    pub objective_names: Vec<String>,
    pub directions: Vec<Direction>,
    /// Size of the union before filtering.
    pub union_size: usize,
    /// Sorted by canonical objective vector.
    pub members: Vec<AggregateMember>,
}

impl NondominatedSet {
    /// Builds a set directly from objective vectors; provenance run = position.
    pub fn from_points(objective_names: Vec<String>, directions: Vec<Direction>, points: &[Vec<f64>]) -> Self {
        let members = points
            .iter()
            .enumerate()
            .map(|(i, p)| AggregateMember {
                genome: Vec::new(),
                objectives: p.clone(),
                aux: BTreeMap::new(),
                provenance: vec![Provenance { algorithm: String::new(), run: i, seed: 0, generation: 0 }],
            })
            .collect();
        Self { problem: String::new(), genome_names: Vec::new(), objective_names, directions, union_size: points.len(), members }
    }

    pub fn spec(&self) -> ObjectiveSpec {
        ObjectiveSpec::new(self.directions.clone())
    }

    pub fn canonical(&self) -> Vec<Vec<f64>> {
        let spec = self.spec();
        self.members.iter().map(|m| spec.to_canonical(&m.objectives)).collect()
    }

    pub fn aux_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.members.iter().flat_map(|m| m.aux.keys().cloned()).collect();
        names.sort();
        names.dedup();
        names
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(a.len().cmp(&b.len()))
}

/// Union of the feasible final members of all successful records, filtered to
/// the mutually non-dominated subset. Identical objective vectors collapse into
/// one member carrying every provenance; the kept genome is the smallest.
pub fn aggregate_nondominated(records: &[RunRecord]) -> Result<NondominatedSet, HarnessError> {
    let first = records.first().ok_or_else(|| HarnessError::Config("no records to aggregate".into()))?;
    if records.iter().any(|r| {
        r.problem != first.problem || r.objective_names != first.objective_names || r.directions != first.directions
    }) {
        return Err(HarnessError::MixedProblems);
    }
    let spec = ObjectiveSpec::new(first.directions.clone());
    let mut union: Vec<(Vec<f64>, AggregateMember)> = Vec::new();
    for r in records.iter().filter(|r| r.is_ok()) {
        for s in r.solutions.iter().filter(|s| s.feasible) {
            let member = AggregateMember {
                genome: s.genome.clone(),
                objectives: s.objectives.clone(),
                aux: s.aux.clone(),
                provenance: vec![Provenance {
                    algorithm: r.algorithm.clone(),
                    run: r.run,
                    seed: r.seed,
                    generation: s.generation,
                }],
            };
            union.push((spec.to_canonical(&s.objectives), member));
        }
    }
    let union_size = union.len();
    union.sort_by(|a, b| lex(&a.0, &b.0).then_with(|| lex(&a.1.genome, &b.1.genome)));

    let mut collapsed: Vec<(Vec<f64>, AggregateMember)> = Vec::new();
    for (obj, member) in union {
        match collapsed.last_mut() {
            Some((o, m)) if *o == obj => m.provenance.extend(member.provenance),
            _ => collapsed.push((obj, member)),
        }
    }
    for (_, m) in &mut collapsed {
        m.provenance.sort();
    }

    // after the lexicographic sort a point can only be dominated by an earlier one
    let mut kept: Vec<(Vec<f64>, AggregateMember)> = Vec::new();
    for (obj, member) in collapsed {
        if !kept.iter().any(|(k, _)| dominates(k, &obj)) {
            kept.push((obj, member));
        }
    }
    Ok(NondominatedSet {
        problem: first.problem.clone(),
        genome_names: first.genome_names.clone(),
        objective_names: first.objective_names.clone(),
        directions: first.directions.clone(),
        union_size,
        members: kept.into_iter().map(|(_, m)| m).collect(),
    })
}

//! Labelled design picks from a non-dominated set.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::aggregate::{NondominatedSet, Provenance};
use crate::HarnessError;

pub const DEFAULT_FEASIBLE_LX: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    MaxObj1,
    MinObj2,
    MinObj3,
    MaxObj1FeasibleActuator,
    Balanced,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::MaxObj1 => "max_obj1",
            Label::MinObj2 => "min_obj2",
            Label::MinObj3 => "min_obj3",
            Label::MaxObj1FeasibleActuator => "max_obj1_feasible_actuator",
            Label::Balanced => "balanced",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub label: Label,
    /// Position in the set's member list.
    pub index: usize,
    pub genome: Vec<f64>,
    pub objectives: Vec<f64>,
    pub lx: Option<f64>,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignCatalog {
    pub feasible_lx: f64,
    pub entries: Vec<CatalogEntry>,
    /// Labels that could not be assigned, with the reason.
    pub flags: Vec<String>,
}

impl DesignCatalog {
    pub fn get(&self, label: Label) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.label == label)
    }
}

/// Actuator stroke of a member: the `Lx` aux value, else the third objective.
pub fn stroke(set: &NondominatedSet, index: usize) -> Option<f64> {
    let m = &set.members[index];
    m.aux.get("Lx").copied().or_else(|| m.objectives.get(2).copied())
}

/// Canonical objectives rotated to start at `first`, then the lowest run index.
fn tie_key(canonical: &[f64], first: usize) -> Vec<f64> {
    (0..canonical.len()).map(|k| canonical[(first + k) % canonical.len()]).collect()
}

fn pick(set: &NondominatedSet, canonical: &[Vec<f64>], candidates: &[usize], objective: usize) -> Option<usize> {
    candidates.iter().copied().min_by(|&a, &b| {
        let (ka, kb) = (tie_key(&canonical[a], objective), tie_key(&canonical[b], objective));
        ka.iter()
            .zip(&kb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
            .then(set.members[a].first_run().cmp(&set.members[b].first_run()))
            .then(a.cmp(&b))
    })
}

/// Max-normalized Chebyshev distance to the ideal point, per member.
pub fn chebyshev_to_ideal(canonical: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = canonical.first() else { return Vec::new() };
    let m = first.len();
    let ideal: Vec<f64> = (0..m).map(|k| canonical.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min)).collect();
    let nadir: Vec<f64> = (0..m).map(|k| canonical.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
    canonical
        .iter()
        .map(|p| {
            (0..m)
                .map(|k| {
                    let range = nadir[k] - ideal[k];
                    if range > 0.0 {
                        (p[k] - ideal[k]) / range
                    } else {
                        0.0
                    }
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

pub fn select_designs(set: &NondominatedSet, feasible_lx: f64) -> Result<DesignCatalog, HarnessError> {
    if set.is_empty() {
        return Err(HarnessError::EmptySet);
    }
    let canonical = set.canonical();
    let m = set.objective_names.len();
    let all: Vec<usize> = (0..set.len()).collect();
    let mut picks: Vec<(Label, usize)> = Vec::new();
    let mut flags = Vec::new();

    picks.push((Label::MaxObj1, pick(set, &canonical, &all, 0).expect("non-empty")));
    for (label, k) in [(Label::MinObj2, 1), (Label::MinObj3, 2)] {
        if k < m {
            picks.push((label, pick(set, &canonical, &all, k).expect("non-empty")));
        } else {
            flags.push(format!("{}: problem has only {m} objective(s)", label.name()));
        }
    }
    let within: Vec<usize> = all.iter().copied().filter(|&i| stroke(set, i).is_some_and(|lx| lx <= feasible_lx)).collect();
    match pick(set, &canonical, &within, 0) {
        Some(i) => picks.push((Label::MaxObj1FeasibleActuator, i)),
        None => flags.push(format!("{}: no member with L_x <= {feasible_lx}", Label::MaxObj1FeasibleActuator.name())),
    }
    let dist = chebyshev_to_ideal(&canonical);
    let balanced = all
        .iter()
        .copied()
        .min_by(|&a, &b| {
            dist[a]
                .total_cmp(&dist[b])
                .then(canonical[a].iter().zip(&canonical[b]).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal))
                .then(set.members[a].first_run().cmp(&set.members[b].first_run()))
        })
        .expect("non-empty");
    picks.push((Label::Balanced, balanced));

    let entries = picks
        .into_iter()
        .map(|(label, index)| {
            let member = &set.members[index];
            CatalogEntry {
                label,
                index,
                genome: member.genome.clone(),
                objectives: member.objectives.clone(),
                lx: stroke(set, index),
                provenance: member.provenance.clone(),
            }
        })
        .collect();
    Ok(DesignCatalog { feasible_lx, entries, flags })
}

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use exopt::base::Direction;
use exopt_harness::runner::{RunRecord, RunStatus, Solution, RECORD_SCHEMA_VERSION};

/// A successful record whose final set holds `points` (reported orientation).
pub fn record(algorithm: &str, run: usize, directions: &[Direction], points: &[Vec<f64>]) -> RunRecord {
    let m = directions.len();
    RunRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        run,
        seed: 100 + run as u64,
        algorithm: algorithm.into(),
        problem: "synthetic".into(),
        status: RunStatus::Ok,
        error: None,
        genome_names: vec!["x1".into()],
        objective_names: (1..=m).map(|k| format!("obj{k}")).collect(),
        directions: directions.to_vec(),
        history: vec![0.0],
        evaluations: vec![0],
        solutions: points
            .iter()
            .enumerate()
            .map(|(i, p)| Solution {
                genome: vec![i as f64],
                objectives: p.clone(),
                violations: vec![],
                total_violation: 0.0,
                feasible: true,
                aux: BTreeMap::new(),
                generation: i,
            })
            .collect(),
        convergence: None,
    }
}

pub fn min2() -> Vec<Direction> {
    vec![Direction::Minimize, Direction::Minimize]
}

/// Every file below `dir` except wall-clock timing files, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if !path.file_name().unwrap().to_str().unwrap().starts_with("timing") {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

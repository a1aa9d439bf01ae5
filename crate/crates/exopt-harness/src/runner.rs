//! Seeded repetitions with per-run persistence.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use exopt::base::{Direction, Individual, Problem};
use exopt::ea::{run_bbbc, run_ga, RunHistory};
use exopt::metrics::{convergence_time, generation_of_convergence, mean_std, Normalization};
use exopt::moea::{run_moea, Engine};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, GcRule};
use crate::export::{write_rows, ExportRow, Layout};
use crate::problems::AnyProblem;
use crate::HarnessError;

pub const RECORD_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub genome: Vec<f64>,
    /// Objective values in their reported orientation.
    pub objectives: Vec<f64>,
    pub violations: Vec<f64>,
    pub total_violation: f64,
    pub feasible: bool,
    pub aux: BTreeMap<String, f64>,
    pub generation: usize,
}

impl Solution {
    fn from_individual<P: Problem<f64> + ?Sized>(ind: &Individual<f64>, problem: &P) -> Self {
        let e = ind.eval();
        Self {
            genome: ind.genome.clone(),
            objectives: problem.objectives().to_reported(&e.objectives),
            violations: e.violations.clone(),
            total_violation: e.total_violation,
            feasible: e.feasible,
            aux: e.aux.clone(),
            generation: ind.born,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub window: usize,
    pub margin: f64,
    pub gc: usize,
    pub ng: usize,
    /// Runtime measured in evaluations, so records stay replayable.
    pub rt_evaluations: u64,
    pub ct_evaluations: f64,
}

/// Everything a run produced except wall-clock time, which lives in [`Timing`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub run: usize,
    pub seed: u64,
    pub algorithm: String,
    pub problem: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub genome_names: Vec<String>,
    pub objective_names: Vec<String>,
    pub directions: Vec<Direction>,
    /// Best reported objective (single-objective) or rank-0 hypervolume per generation; entry 0 is the initial population.
    pub history: Vec<f64>,
    pub evaluations: Vec<u64>,
    pub solutions: Vec<Solution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<Convergence>,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }

    pub fn aux_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.solutions.iter().flat_map(|s| s.aux.keys().cloned()).collect();
        names.sort();
        names.dedup();
        names
    }

    pub fn layout(&self) -> Layout {
        Layout {
            genome: self.genome_names.clone(),
            objectives: self.objective_names.clone(),
            aux: self.aux_names(),
        }
    }

    pub fn rows(&self) -> Vec<ExportRow> {
        let aux = self.aux_names();
        self.solutions
            .iter()
            .map(|s| ExportRow {
                genome: s.genome.clone(),
                objectives: s.objectives.clone(),
                aux: aux.iter().map(|k| s.aux.get(k).copied()).collect(),
                run: self.run,
                generation: s.generation,
                seed: self.seed,
            })
            .collect()
    }
}

/// Wall-clock measurements, kept apart from the replayable record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub run: usize,
    pub seed: u64,
    pub wall_seconds: Vec<f64>,
    pub rt_seconds: f64,
    pub ct_seconds: Option<f64>,
}

fn convergence(history: &[f64], evaluations: &[u64], rule: GcRule) -> Option<Convergence> {
    // entry 0 is the initial population; GC counts executed generations
    let gens = if history.len() > 1 { &history[1..] } else { history };
    if gens.is_empty() {
        return None;
    }
    let ng = gens.len();
    let gc = generation_of_convergence(gens, rule.window, rule.margin);
    let rt = evaluations.last().copied().unwrap_or(0);
    Some(Convergence {
        window: rule.window,
        margin: rule.margin,
        gc,
        ng,
        rt_evaluations: rt,
        ct_evaluations: convergence_time(gc, ng, rt as f64).ok()?,
    })
}

/// Runs one repetition. Engine errors produce a failed record rather than an `Err`.
pub fn run_single(cfg: &ExperimentConfig, problem: &AnyProblem, run: usize) -> (RunRecord, Timing) {
    let seed = cfg.seed.wrapping_add(run as u64);
    let mut record = RunRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        run,
        seed,
        algorithm: cfg.algorithm_name().to_string(),
        problem: cfg.problem.name(),
        status: RunStatus::Ok,
        error: None,
        genome_names: problem.genome_names(),
        objective_names: problem.objective_names(),
        directions: problem.objectives().directions.clone(),
        history: Vec::new(),
        evaluations: Vec::new(),
        solutions: Vec::new(),
        convergence: None,
    };
    let outcome: Result<(Vec<Solution>, RunHistory<f64>), exopt::OptError> = if cfg.is_moea() {
        run_moea(problem, &cfg.moea_params(), seed).map(|(front, h)| {
            (front.members.iter().map(|m| Solution::from_individual(m, problem)).collect(), h)
        })
    } else {
        let single = match cfg.algorithm {
            Engine::Ga => run_ga(problem, &cfg.ga_params(), seed),
            Engine::Bbbc => run_bbbc(problem, &cfg.bbbc_params(), seed),
        };
        single.map(|(best, mut h)| {
            // report the best value in its reported orientation
            let spec = problem.objectives();
            h.best = h.best.iter().map(|&v| spec.to_reported(&[v])[0]).collect();
            (vec![Solution::from_individual(&best, problem)], h)
        })
    };
    let mut timing = Timing { run, seed, wall_seconds: Vec::new(), rt_seconds: 0.0, ct_seconds: None };
    match outcome {
        Ok((solutions, history)) => {
            record.solutions = solutions;
            record.history = history.best.clone();
            record.evaluations = history.evaluations.clone();
            record.convergence = convergence(&record.history, &record.evaluations, cfg.gc_rule());
            timing.rt_seconds = history.runtime();
            timing.ct_seconds = record
                .convergence
                .as_ref()
                .and_then(|c| convergence_time(c.gc, c.ng, timing.rt_seconds).ok());
            timing.wall_seconds = history.wall_seconds;
        }
        Err(e) => {
            record.status = RunStatus::Failed;
            record.error = Some(e.to_string());
        }
    }
    (record, timing)
}

pub fn run_dir(output: &Path, run: usize) -> PathBuf {
    output.join(format!("run_{run:03}"))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Config(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

fn persist_run(dir: &Path, record: &RunRecord, timing: &Timing) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write_json(&dir.join("record.json"), record)?;
    write_json(&dir.join("timing.json"), timing)?;
    let mut history = String::from("generation,value,evaluations\n");
    for (g, (v, e)) in record.history.iter().zip(&record.evaluations).enumerate() {
        history.push_str(&format!("{g},{v},{e}\n"));
    }
    let path = dir.join("history.csv");
    fs::write(&path, history).map_err(|e| HarnessError::io(&path, e))?;
    write_rows(&dir.join("final.csv"), &record.layout(), &record.rows())
}

/// Runs every repetition with seeds `seed + r`, persisting each record as it finishes,
/// then writes the experiment summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, HarnessError> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    write_json(&out.join("config.json"), cfg)?;
    let problem = AnyProblem::build(&cfg.problem)?;
    let mut records = Vec::with_capacity(cfg.repetitions);
    let mut timings = Vec::with_capacity(cfg.repetitions);
    for r in 0..cfg.repetitions {
        let (record, timing) = run_single(cfg, &problem, r);
        persist_run(&run_dir(out, r), &record, &timing)?;
        records.push(record);
        timings.push(timing);
    }
    write_json(&out.join("summary.json"), &ExperimentSummary::from_records(&records)?)?;
    write_json(&out.join("timing_summary.json"), &TimingSummary::from_timings(&timings))?;
    Ok(records)
}

/// Loads every `run_*/record.json` below an experiment directory, in run order.
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("run_")))
        .map(|p| p.join("record.json"))
        .filter(|p| p.exists())
        .collect();
    paths.sort();
    let mut records: Vec<RunRecord> = paths.iter().map(|p| read_json(p)).collect::<Result<_, _>>()?;
    records.sort_by_key(|r| r.run);
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub values: Vec<f64>,
}

impl MeanStd {
    pub fn of(values: Vec<f64>) -> Self {
        if values.is_empty() {
            return Self { mean: None, std: None, values };
        }
        let (m, s) = mean_std(&values);
        Self { mean: Some(m), std: Some(s), values }
    }
}

/// Table-style summary of one experiment, recomputable from its records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub algorithm: String,
    pub problem: String,
    pub repetitions: usize,
    pub completed: usize,
    pub failed_runs: Vec<usize>,
    /// `best_objective` for single-objective runs, `hypervolume` otherwise.
    pub optimality_metric: String,
    pub optimality: MeanStd,
    /// Runs whose reported best is feasible (single-objective) or whose final set has a feasible member.
    pub feasible_runs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization<f64>>,
    pub gc: MeanStd,
    pub ct_evaluations: MeanStd,
}

impl ExperimentSummary {
    pub fn from_records(records: &[RunRecord]) -> Result<Self, HarnessError> {
        let first = records.first().ok_or_else(|| HarnessError::Config("no records to summarize".into()))?;
        if records.iter().any(|r| r.problem != first.problem || r.algorithm != first.algorithm) {
            return Err(HarnessError::MixedProblems);
        }
        let ok: Vec<&RunRecord> = records.iter().filter(|r| r.is_ok()).collect();
        let failed_runs = records.iter().filter(|r| !r.is_ok()).map(|r| r.run).collect();
        let moop = first.objective_names.len() > 1;
        let feasible_runs = ok.iter().filter(|r| r.solutions.iter().any(|s| s.feasible)).count();
        let (metric, values, normalization) = if moop {
            let spec = exopt::base::ObjectiveSpec::new(first.directions.clone());
            let sets: Vec<Vec<Vec<f64>>> = ok
                .iter()
                .map(|r| r.solutions.iter().map(|s| spec.to_canonical(&s.objectives)).collect())
                .collect();
            let norm = Normalization::from_sets(sets.iter().map(|s| s.as_slice()));
            let values = match &norm {
                Some(n) => sets.iter().map(|s| n.hypervolume(s).map(|h| h.value)).collect::<Result<Vec<_>, _>>()?,
                None => Vec::new(),
            };
            ("hypervolume", values, norm)
        } else {
            let values = ok.iter().filter_map(|r| r.solutions.first().map(|s| s.objectives[0])).collect();
            ("best_objective", values, None)
        };
        let conv: Vec<&Convergence> = ok.iter().filter_map(|r| r.convergence.as_ref()).collect();
        Ok(Self {
            algorithm: first.algorithm.clone(),
            problem: first.problem.clone(),
            repetitions: records.len(),
            completed: ok.len(),
            failed_runs,
            optimality_metric: metric.to_string(),
            optimality: MeanStd::of(values),
            feasible_runs,
            normalization,
            gc: MeanStd::of(conv.iter().map(|c| c.gc as f64).collect()),
            ct_evaluations: MeanStd::of(conv.iter().map(|c| c.ct_evaluations).collect()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub rt_seconds: MeanStd,
    pub ct_seconds: MeanStd,
}

impl TimingSummary {
    pub fn from_timings(timings: &[Timing]) -> Self {
        Self {
            rt_seconds: MeanStd::of(timings.iter().map(|t| t.rt_seconds).collect()),
            ct_seconds: MeanStd::of(timings.iter().filter_map(|t| t.ct_seconds).collect()),
        }
    }
}

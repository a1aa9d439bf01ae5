//! CSV, SVG and JSON artifacts.
//!
//! CSV column order is fixed: genome…, objectives…, aux…, run, generation, seed.
//! Floats are written in Rust's shortest round-trip form, so a parsed file
//! re-exports byte-identically. Missing aux values are empty cells.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use exopt::metrics::pearson_correlation;
use serde::{Deserialize, Serialize};

use crate::aggregate::NondominatedSet;
use crate::catalog::{stroke, DesignCatalog};
use crate::plot::{scatter_svg, Marker, ScatterPoint};
use crate::runner::{write_json, ExperimentSummary, RunRecord};
use crate::HarnessError;

const TRAILER: [&str; 3] = ["run", "generation", "seed"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub genome: Vec<String>,
    pub objectives: Vec<String>,
    pub aux: Vec<String>,
}

impl Layout {
    pub fn header(&self) -> Vec<String> {
        self.genome
            .iter()
            .chain(&self.objectives)
            .chain(&self.aux)
            .cloned()
            .chain(TRAILER.iter().map(|s| s.to_string()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRow {
    pub genome: Vec<f64>,
    pub objectives: Vec<f64>,
    pub aux: Vec<Option<f64>>,
    pub run: usize,
    pub generation: usize,
    pub seed: u64,
}

fn csv_error(path: &Path, e: csv::Error) -> HarnessError {
    HarnessError::Parse { path: path.to_path_buf(), message: e.to_string() }
}

pub fn write_rows(path: &Path, layout: &Layout, rows: &[ExportRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(layout.header()).map_err(|e| csv_error(path, e))?;
    for row in rows {
        if row.genome.len() != layout.genome.len()
            || row.objectives.len() != layout.objectives.len()
            || row.aux.len() != layout.aux.len()
        {
            return Err(HarnessError::Parse { path: path.to_path_buf(), message: "row does not match layout".into() });
        }
        let fields: Vec<String> = row
            .genome
            .iter()
            .chain(&row.objectives)
            .map(|v| v.to_string())
            .chain(row.aux.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()))
            .chain([row.run.to_string(), row.generation.to_string(), row.seed.to_string()])
            .collect();
        w.write_record(&fields).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Parses a file written by [`write_rows`]; the genome and objective column
/// counts split the header, remaining columns before the trailer are aux.
pub fn read_rows(path: &Path, genome: usize, objectives: usize) -> Result<(Layout, Vec<ExportRow>), HarnessError> {
    let bad = |message: String| HarnessError::Parse { path: path.to_path_buf(), message };
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| csv_error(path, e))?.iter().map(String::from).collect();
    let fixed = genome + objectives + TRAILER.len();
    if header.len() < fixed || header[header.len() - 3..] != TRAILER {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let n_aux = header.len() - fixed;
    let layout = Layout {
        genome: header[..genome].to_vec(),
        objectives: header[genome..genome + objectives].to_vec(),
        aux: header[genome + objectives..genome + objectives + n_aux].to_vec(),
    };
    let float = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
    let int = |s: &str| s.parse::<u64>().map_err(|e| bad(format!("{s:?}: {e}")));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let cells: Vec<&str> = rec.iter().collect();
        let split = genome + objectives;
        let aux_end = split + n_aux;
        rows.push(ExportRow {
            genome: cells[..genome].iter().map(|s| float(s)).collect::<Result<_, _>>()?,
            objectives: cells[genome..split].iter().map(|s| float(s)).collect::<Result<_, _>>()?,
            aux: cells[split..aux_end]
                .iter()
                .map(|s| if s.is_empty() { Ok(None) } else { float(s).map(Some) })
                .collect::<Result<_, _>>()?,
            run: int(cells[aux_end])? as usize,
            generation: int(cells[aux_end + 1])? as usize,
            seed: int(cells[aux_end + 2])?,
        });
    }
    Ok((layout, rows))
}

pub fn set_layout(set: &NondominatedSet) -> Layout {
    Layout { genome: set.genome_names.clone(), objectives: set.objective_names.clone(), aux: set.aux_names() }
}

/// One row per member, attributed to its first provenance entry.
pub fn set_rows(set: &NondominatedSet) -> Vec<ExportRow> {
    let aux = set.aux_names();
    set.members
        .iter()
        .map(|m| {
            let p = m.provenance.first();
            ExportRow {
                genome: m.genome.clone(),
                objectives: m.objectives.clone(),
                aux: aux.iter().map(|k| m.aux.get(k).copied()).collect(),
                run: p.map_or(0, |p| p.run),
                generation: p.map_or(0, |p| p.generation),
                seed: p.map_or(0, |p| p.seed),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub x: String,
    pub y: String,
    /// `None` when undefined (fewer than two points or a constant column).
    pub pearson: Option<f64>,
}

/// Pearson coefficients for every objective pair of the set.
pub fn objective_correlations(set: &NondominatedSet) -> Vec<Correlation> {
    let m = set.objective_names.len();
    let column = |k: usize| set.members.iter().map(|p| p.objectives[k]).collect::<Vec<f64>>();
    let mut out = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            out.push(Correlation {
                x: set.objective_names[i].clone(),
                y: set.objective_names[j].clone(),
                pearson: pearson_correlation(&column(i), &column(j)).ok(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub problem: String,
    pub experiments: Vec<ExperimentSummary>,
    pub union_size: usize,
    pub nondominated: usize,
    pub correlations: Vec<Correlation>,
    pub catalog_flags: Vec<String>,
}

impl Report {
    /// Per-algorithm summaries plus set statistics; records are grouped by algorithm name.
    pub fn build(
        records: &[RunRecord],
        set: &NondominatedSet,
        catalog: Option<&DesignCatalog>,
    ) -> Result<Self, HarnessError> {
        let mut groups: BTreeMap<&str, Vec<RunRecord>> = BTreeMap::new();
        for r in records {
            groups.entry(&r.algorithm).or_default().push(r.clone());
        }
        let experiments = groups.values().map(|g| ExperimentSummary::from_records(g)).collect::<Result<_, _>>()?;
        Ok(Self {
            problem: set.problem.clone(),
            experiments,
            union_size: set.union_size,
            nondominated: set.len(),
            correlations: objective_correlations(set),
            catalog_flags: catalog.map(|c| c.flags.clone()).unwrap_or_default(),
        })
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

/// Writes `nondominated.csv`, `nondominated.json`, `catalog.json` (when given),
/// `report.json` and one `pareto_<a>_<b>.svg` per objective pair. Returns the written paths.
pub fn export_artifacts(
    records: &[RunRecord],
    set: &NondominatedSet,
    catalog: Option<&DesignCatalog>,
    dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut written = Vec::new();

    let path = dir.join("nondominated.csv");
    write_rows(&path, &set_layout(set), &set_rows(set))?;
    written.push(path);

    let path = dir.join("nondominated.json");
    write_json(&path, set)?;
    written.push(path);

    if let Some(c) = catalog {
        let path = dir.join("catalog.json");
        write_json(&path, c)?;
        written.push(path);
    }

    let path = dir.join("report.json");
    write_json(&path, &Report::build(records, set, catalog)?)?;
    written.push(path);

    let threshold = catalog.map_or(crate::catalog::DEFAULT_FEASIBLE_LX, |c| c.feasible_lx);
    let names = &set.objective_names;
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            let points: Vec<ScatterPoint> = set
                .members
                .iter()
                .enumerate()
                .map(|(k, m)| ScatterPoint {
                    x: m.objectives[i],
                    y: m.objectives[j],
                    highlight: stroke(set, k).is_some_and(|lx| lx <= threshold),
                })
                .collect();
            let markers: Vec<Marker> = catalog
                .map(|c| {
                    c.entries
                        .iter()
                        .map(|e| Marker { x: e.objectives[i], y: e.objectives[j], label: e.label.name().to_string() })
                        .collect()
                })
                .unwrap_or_default();
            let title = format!("{} vs {}", names[j], names[i]);
            let svg = scatter_svg(&title, &names[i], &names[j], &points, &markers, &format!("L_x <= {threshold}"));
            let path = dir.join(format!("pareto_{}_{}.svg", names[i], names[j]));
            write_text(&path, &svg)?;
            written.push(path);
        }
    }
    Ok(written)
}

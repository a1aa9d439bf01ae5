use std::io::{self, BufWriter};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use exopt::base::Problem;
use exopt::benchmarks::{BiObjective, Sphere};
use exopt::linkage::{brute_force_grid, SweepSpec, UhexMode, UhexProblem};
use exopt::moea::{Engine, Survival};
use exopt_harness::aggregate::{aggregate_nondominated, NondominatedSet};
use exopt_harness::catalog::{select_designs, DEFAULT_FEASIBLE_LX};
use exopt_harness::config::{ExperimentConfig, Overrides};
use exopt_harness::export::{export_artifacts, set_layout, set_rows, write_rows};
use exopt_harness::external::{serve, ServeOptions};
use exopt_harness::runner::{load_records, run_experiment, ExperimentSummary, RunRecord};

#[derive(Parser)]
#[command(name = "exopt", version, about = "Evolutionary design optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Ga,
    Bbbc,
}

#[derive(Clone, Copy, ValueEnum)]
enum SurvivalArg {
    None,
    Ns,
    Sp,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Uhex,
    Sphere,
    Biobjective,
    External,
}

impl ProblemArg {
    fn name(self) -> &'static str {
        match self {
            ProblemArg::Uhex => "uhex",
            ProblemArg::Sphere => "sphere",
            ProblemArg::Biobjective => "biobjective",
            ProblemArg::External => "external",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded repetitions of one algorithm on one problem.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        problem: Option<ProblemArg>,
        #[arg(long)]
        mode: Option<UhexMode>,
        #[arg(long)]
        link_count: Option<usize>,
        #[arg(long)]
        sweep_steps: Option<usize>,
        #[arg(long, value_enum)]
        algorithm: Option<AlgorithmArg>,
        #[arg(long, value_enum)]
        survival: Option<SurvivalArg>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        population: Option<usize>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Evaluator command line, split on whitespace.
        #[arg(long)]
        external_evaluator: Option<String>,
        /// Print the resolved config and exit.
        #[arg(long)]
        dry_run: bool,
    },
    /// Union the final sets of one or more experiment directories into a non-dominated set.
    Aggregate {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "aggregate")]
        output_dir: PathBuf,
    },
    /// Pick the labelled catalog designs from an aggregated set.
    Select {
        /// A `nondominated.json` written by `aggregate`.
        set: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FEASIBLE_LX)]
        feasible_lx: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Aggregate, select and write CSV/SVG/JSON artifacts for experiment directories.
    Export {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "export")]
        output_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FEASIBLE_LX)]
        feasible_lx: f64,
    },
    /// Exhaustive grid search over the link-length box.
    Oracle {
        #[arg(long, default_value = "soop")]
        mode: UhexMode,
        #[arg(long, default_value_t = 6)]
        link_count: usize,
        #[arg(long, default_value_t = 20)]
        sweep_steps: usize,
        #[arg(long, default_value_t = 5)]
        resolution: usize,
    },
    /// Serve a built-in problem over the line-oriented JSON evaluator protocol.
    StdioEvaluator {
        #[arg(long, value_enum, default_value = "sphere")]
        problem: ProblemArg,
        #[arg(long, default_value = "moop")]
        mode: UhexMode,
        #[arg(long, default_value_t = 9)]
        link_count: usize,
        #[arg(long, default_value_t = 100)]
        sweep_steps: usize,
        #[arg(long, default_value_t = 0)]
        delay_ms: u64,
        #[arg(long, default_value_t = 0)]
        malformed_every: usize,
    },
}

fn load_all(inputs: &[PathBuf]) -> Result<Vec<RunRecord>> {
    let mut records = Vec::new();
    for dir in inputs {
        let loaded = load_records(dir).with_context(|| format!("loading {}", dir.display()))?;
        if loaded.is_empty() {
            bail!("no run records under {}", dir.display());
        }
        records.extend(loaded);
    }
    Ok(records)
}

fn print_summary(summary: &ExperimentSummary) {
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6}"));
    println!(
        "{} on {}: {} = {} ± {} over {}/{} runs; GC = {}; CT = {} evaluations",
        summary.algorithm,
        summary.problem,
        summary.optimality_metric,
        fmt(summary.optimality.mean),
        fmt(summary.optimality.std),
        summary.completed,
        summary.repetitions,
        fmt(summary.gc.mean),
        fmt(summary.ct_evaluations.mean),
    );
    if !summary.failed_runs.is_empty() {
        println!("failed runs: {:?}", summary.failed_runs);
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            problem,
            mode,
            link_count,
            sweep_steps,
            algorithm,
            survival,
            generations,
            population,
            repetitions,
            seed,
            output_dir,
            external_evaluator,
            dry_run,
        } => {
            let base = config.as_deref().map(ExperimentConfig::load).transpose()?;
            let overrides = Overrides {
                problem: problem.map(|p| p.name().to_string()),
                mode,
                link_count,
                sweep_steps,
                algorithm: algorithm.map(|a| match a {
                    AlgorithmArg::Ga => Engine::Ga,
                    AlgorithmArg::Bbbc => Engine::Bbbc,
                }),
                survival: survival.map(|s| match s {
                    SurvivalArg::None => None,
                    SurvivalArg::Ns => Some(Survival::Ns),
                    SurvivalArg::Sp => Some(Survival::Sp),
                }),
                generations,
                pop_size: population,
                repetitions,
                seed,
                output_dir,
                external_command: external_evaluator.map(|c| c.split_whitespace().map(String::from).collect()),
            };
            let cfg = overrides.apply(base)?;
            if dry_run {
                println!("{}", cfg.to_json());
                return Ok(());
            }
            let records = run_experiment(&cfg)?;
            print_summary(&ExperimentSummary::from_records(&records)?);
            println!("results in {}", cfg.output_dir.display());
        }
        Command::Aggregate { inputs, output_dir } => {
            let set = aggregate_nondominated(&load_all(&inputs)?)?;
            std::fs::create_dir_all(&output_dir).with_context(|| format!("creating {}", output_dir.display()))?;
            let json = serde_json::to_string_pretty(&set)? + "\n";
            std::fs::write(output_dir.join("nondominated.json"), json)?;
            write_rows(&output_dir.join("nondominated.csv"), &set_layout(&set), &set_rows(&set))?;
            println!("{} non-dominated of {} feasible final members", set.len(), set.union_size);
        }
        Command::Select { set, feasible_lx, output } => {
            let text = std::fs::read_to_string(&set).with_context(|| format!("reading {}", set.display()))?;
            let set: NondominatedSet = serde_json::from_str(&text)?;
            let catalog = select_designs(&set, feasible_lx)?;
            let json = serde_json::to_string_pretty(&catalog)? + "\n";
            match output {
                Some(path) => std::fs::write(path, json)?,
                None => print!("{json}"),
            }
            for flag in &catalog.flags {
                eprintln!("flag: {flag}");
            }
        }
        Command::Export { inputs, output_dir, feasible_lx } => {
            let records = load_all(&inputs)?;
            let set = aggregate_nondominated(&records)?;
            let catalog = if set.is_empty() { None } else { Some(select_designs(&set, feasible_lx)?) };
            for path in export_artifacts(&records, &set, catalog.as_ref(), &output_dir)? {
                println!("{}", path.display());
            }
        }
        Command::Oracle { mode, link_count, sweep_steps, resolution } => {
            let problem = UhexProblem::<f64>::with_sweep(mode, link_count, SweepSpec::with_steps(sweep_steps))?;
            let best = brute_force_grid(&problem, resolution)?;
            let e = best.eval();
            let out = serde_json::json!({
                "mode": mode.name(),
                "link_count": link_count,
                "resolution": resolution,
                "genome": best.genome,
                "objectives": problem.objectives().to_reported(&e.objectives),
                "feasible": e.feasible,
                "total_violation": e.total_violation,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::StdioEvaluator { problem, mode, link_count, sweep_steps, delay_ms, malformed_every } => {
            let options = ServeOptions { delay_ms, malformed_every };
            let (stdin, stdout) = (io::stdin().lock(), BufWriter::new(io::stdout().lock()));
            match problem {
                ProblemArg::Sphere => serve(&Sphere::<f64>::new(5, 5.0), stdin, stdout, options)?,
                ProblemArg::Biobjective => serve(&BiObjective::<f64>::default(), stdin, stdout, options)?,
                ProblemArg::Uhex => {
                    let p = UhexProblem::<f64>::with_sweep(mode, link_count, SweepSpec::with_steps(sweep_steps))?;
                    serve(&p, stdin, stdout, options)?
                }
                ProblemArg::External => bail!("the evaluator cannot serve an external problem"),
            }
        }
    }
    Ok(())
}

use std::time::Duration;

use exopt::base::{Bounds, Direction, ObjectiveSpec, Problem, SENTINEL_VIOLATION};
use exopt::moea::Engine;
use exopt_harness::config::{ExperimentConfig, ProblemConfig};
use exopt_harness::external::ExternalProblem;
use exopt_harness::runner::run_experiment;

const BIN: &str = env!("CARGO_BIN_EXE_exopt");

fn evaluator(extra: &[&str], timeout_ms: u64) -> ExternalProblem {
    let mut command = vec![BIN.to_string(), "stdio-evaluator".into(), "--problem".into(), "sphere".into()];
    command.extend(extra.iter().map(|s| s.to_string()));
    ExternalProblem::new(
        command,
        Bounds::new(vec![-5.0; 5], vec![5.0; 5]).unwrap(),
        ObjectiveSpec::new(vec![Direction::Minimize]),
        vec![],
        Duration::from_millis(timeout_ms),
    )
    .unwrap()
}

fn is_sentinel(e: &exopt::base::Evaluation<f64>) -> bool {
    !e.feasible && e.objectives[0] == SENTINEL_VIOLATION && e.aux["solved"] == 0.0
}

#[test]
fn replies_are_decoded() {
    let p = evaluator(&[], 10_000);
    let e = p.evaluate(&[1.0, 2.0, 0.0, 0.0, -1.0]);
    assert_eq!(e.objectives, vec![6.0]);
    assert!(e.feasible);
    assert_eq!(e.violations, vec![0.0], "solver slot appended");
    assert_eq!(p.evaluate(&[0.0; 5]).objectives, vec![0.0]);
}

#[test]
fn timeouts_give_the_sentinel() {
    let p = evaluator(&["--delay-ms", "2000"], 100);
    assert!(is_sentinel(&p.evaluate(&[1.0; 5])));
    assert!(is_sentinel(&p.evaluate(&[1.0; 5])));
}

#[test]
fn malformed_replies_give_the_sentinel_and_the_stream_stays_in_step() {
    let p = evaluator(&["--malformed-every", "2"], 10_000);
    assert_eq!(p.evaluate(&[1.0, 0.0, 0.0, 0.0, 0.0]).objectives, vec![1.0]);
    assert!(is_sentinel(&p.evaluate(&[2.0, 0.0, 0.0, 0.0, 0.0])));
    assert_eq!(p.evaluate(&[3.0, 0.0, 0.0, 0.0, 0.0]).objectives, vec![9.0]);
}

#[test]
fn missing_program_is_reported() {
    let r = ExternalProblem::new(
        vec!["/nonexistent/evaluator".into()],
        Bounds::new(vec![0.0], vec![1.0]).unwrap(),
        ObjectiveSpec::new(vec![Direction::Minimize]),
        vec![],
        Duration::from_millis(100),
    );
    assert!(r.is_err());
}

#[test]
fn external_experiment_matches_the_builtin_problem() {
    let run = |problem: ProblemConfig| {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(problem, Engine::Ga, None);
        cfg.output_dir = dir.path().to_path_buf();
        cfg.repetitions = 1;
        cfg.generations = Some(5);
        cfg.pop_size = Some(20);
        run_experiment(&cfg).unwrap().remove(0)
    };
    let external = run(ProblemConfig::External {
        command: vec![BIN.into(), "stdio-evaluator".into()],
        lower: vec![-5.0; 5],
        upper: vec![5.0; 5],
        directions: vec![Direction::Minimize],
        constraints: 0,
        constraint_scales: vec![],
        timeout_ms: 10_000,
    });
    let builtin = run(ProblemConfig::Sphere { dim: 5, half_width: 5.0 });
    assert_eq!(external.history, builtin.history);
    assert_eq!(external.solutions[0].genome, builtin.solutions[0].genome);
}

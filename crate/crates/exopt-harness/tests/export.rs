mod common;

use common::{min2, record};
use exopt::base::Direction;
use exopt_harness::aggregate::{aggregate_nondominated, NondominatedSet};
use exopt_harness::catalog::select_designs;
use exopt_harness::export::{export_artifacts, objective_correlations, read_rows, write_rows, ExportRow, Layout};

fn layout() -> Layout {
    Layout {
        genome: vec!["a".into(), "b".into()],
        objectives: vec!["obj1".into()],
        aux: vec!["Lx".into(), "solved".into()],
    }
}

#[test]
fn csv_round_trips_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec![
        ExportRow {
            genome: vec![0.1, 1e-300],
            objectives: vec![-123456.789],
            aux: vec![Some(f64::INFINITY), None],
            run: 3,
            generation: 50,
            seed: u64::MAX,
        },
        ExportRow {
            genome: vec![1.0 / 3.0, 2.0f64.sqrt()],
            objectives: vec![f64::NAN],
            aux: vec![Some(0.0), Some(1.0)],
            run: 0,
            generation: 0,
            seed: 0,
        },
    ];
    let first = dir.path().join("first.csv");
    write_rows(&first, &layout(), &rows).unwrap();
    let (parsed_layout, parsed) = read_rows(&first, 2, 1).unwrap();
    assert_eq!(parsed_layout, layout());
    assert_eq!(parsed[0], rows[0]);
    assert_eq!(parsed[1].genome, rows[1].genome);
    assert!(parsed[1].objectives[0].is_nan());
    let second = dir.path().join("second.csv");
    write_rows(&second, &parsed_layout, &parsed).unwrap();
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    let text = std::fs::read_to_string(&first).unwrap();
    assert_eq!(text.lines().next().unwrap(), "a,b,obj1,Lx,solved,run,generation,seed");
}

#[test]
fn mismatched_rows_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let row = ExportRow { genome: vec![1.0], objectives: vec![1.0], aux: vec![], run: 0, generation: 0, seed: 0 };
    assert!(write_rows(&dir.path().join("x.csv"), &layout(), &[row]).is_err());
}

#[test]
fn empty_set_exports_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = record("a", 0, &min2(), &[vec![1.0, 1.0]]);
    r.solutions[0].feasible = false;
    let set = aggregate_nondominated(&[r.clone()]).unwrap();
    assert!(set.is_empty());
    let written = export_artifacts(&[r], &set, None, dir.path()).unwrap();
    assert!(written.iter().all(|p| p.exists()));
    let csv = std::fs::read_to_string(dir.path().join("nondominated.csv")).unwrap();
    assert_eq!(csv, "x1,obj1,obj2,run,generation,seed\n");
    let svg = std::fs::read_to_string(dir.path().join("pareto_obj1_obj2.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn artifacts_cover_every_objective_pair_and_mark_designs() {
    let dir = tempfile::tempdir().unwrap();
    let dirs = vec![Direction::Maximize, Direction::Minimize, Direction::Minimize];
    let pts: Vec<Vec<f64>> = (0..12).map(|i| f64::from(i)).map(|t| vec![t, 12.0 - t, 8.0 * t]).collect();
    let records = vec![record("ga-ns", 0, &dirs, &pts[..6]), record("bbbc-sp", 0, &dirs, &pts[6..])];
    let set = aggregate_nondominated(&records).unwrap();
    let catalog = select_designs(&set, 50.0).unwrap();
    export_artifacts(&records, &set, Some(&catalog), dir.path()).unwrap();
    for name in ["pareto_obj1_obj2.svg", "pareto_obj1_obj3.svg", "pareto_obj2_obj3.svg"] {
        let svg = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(svg.contains("max_obj1_feasible_actuator"));
        // points with obj3 = L_x <= 50 are t <= 6
        assert_eq!(svg.matches("fill=\"#d62728\"/>").count(), 7 + 1);
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["experiments"].as_array().unwrap().len(), 2);
    assert_eq!(report["nondominated"], 12);
    let r13 = report["correlations"].as_array().unwrap().iter().find(|c| c["y"] == "obj3").unwrap()["pearson"].as_f64();
    assert!((r13.unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn correlations_match_a_direct_computation() {
    let pts = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 0.5]];
    let set = NondominatedSet::from_points(vec!["f1".into(), "f2".into()], min2(), &pts);
    let c = objective_correlations(&set);
    assert_eq!(c.len(), 1);
    // mean x = 2, mean y = 7/6
    let sxy = -1.0 * (2.0 - 7.0 / 6.0) + 1.0 * (0.5 - 7.0 / 6.0);
    let sxx = 2.0;
    let syy: f64 = [2.0, 1.0, 0.5].iter().map(|y: &f64| (y - 7.0 / 6.0).powi(2)).sum();
    assert!((c[0].pearson.unwrap() - sxy / (sxx * syy).sqrt()).abs() < 1e-12);
}

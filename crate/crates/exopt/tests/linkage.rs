use std::collections::BTreeMap;

use exopt::base::{random_genome, stream_rng, Problem, SENTINEL_VIOLATION};
use exopt::linkage::*;

fn unit_four_bar(crank: f64) -> MechanismConfig {
    let json = format!(
        r#"{{
        "schema_version": 1,
        "name": "four-bar",
        "links": ["coupler", "rocker"],
        "reference": {{ "coupler": 1.0, "rocker": 1.0 }},
        "finger": {{ "proximal": {crank}, "middle": 1.0, "mcp": [0.0, 0.0], "rest_angle_deg": 0.0, "flexion_sign": 1.0 }},
        "ground": {{ "O2": [0.0, 0.0], "O4": [1.0, 0.0] }},
        "points": {{ "B": [1.0, 0.0], "C": [1.5, 0.8] }},
        "constraints": [
            {{ "type": "finger", "point": "B", "segment": "proximal", "along": {crank}, "normal": 0.0 }},
            {{ "type": "distance", "a": "B", "b": "C", "length": "coupler" }},
            {{ "type": "distance", "a": "C", "b": "O4", "length": "rocker" }}
        ],
        "actuator": ["O2", "C"],
        "solver": {{ "tolerance": 1e-12 }}
    }}"#
    );
    MechanismConfig::from_json(&json).unwrap()
}

fn rack(radius: f64, offset: f64) -> MechanismConfig {
    let json = format!(
        r#"{{
        "schema_version": 1,
        "name": "rack",
        "links": ["R", "off"],
        "reference": {{ "R": {radius}, "off": {offset} }},
        "ground": {{ "O": [0.0, 0.0] }},
        "points": {{ "A": [{offset}, 0.0] }},
        "params": {{ "a": {offset} }},
        "constraints": [
            {{ "type": "line", "point": "A", "origin": "O", "direction": [1.0, 0.0], "param": "a" }},
            {{ "type": "rack", "param": "a", "joint": "mcp", "radius": "R", "offset": "off" }}
        ],
        "actuator": ["O", "A"]
    }}"#
    );
    MechanismConfig::from_json(&json).unwrap()
}

/// Open-branch coupler joint of a four-bar with ground (0,0)–(1,0), by the law of cosines.
fn four_bar_closed_form(crank: f64, coupler: f64, rocker: f64, theta: f64) -> [f64; 2] {
    let b = [crank * theta.cos(), crank * theta.sin()];
    let dx = b[0] - 1.0;
    let dy = b[1];
    let d = (dx * dx + dy * dy).sqrt();
    let to_b = dy.atan2(dx);
    let gamma = ((rocker * rocker + d * d - coupler * coupler) / (2.0 * rocker * d)).acos();
    let phi = to_b - gamma;
    [1.0 + rocker * phi.cos(), rocker * phi.sin()]
}

fn guess_with(mech: &Mechanism<f64>, c: [f64; 2], b: [f64; 2], theta: f64) -> PostureSolution<f64> {
    // points are ordered B, C
    let mut x = mech.reference_guess();
    x[..4].copy_from_slice(&[b[0], b[1], c[0], c[1]]);
    PostureSolution { x, theta_mcp: theta, theta_pip: 0.0, residual: f64::INFINITY }
}

#[test]
fn four_bar_matches_closed_form() {
    let mech = Mechanism::<f64>::new(unit_four_bar(1.0)).unwrap();
    let links = [1.0, 1.0];
    let th = std::f64::consts::FRAC_PI_2;
    let guess = guess_with(&mech, [1.1, 0.9], [0.0, 1.0], th);
    let sol = mech.solve_posture(&links, th, 0.0, &guess).unwrap();
    let c = mech.point(&sol, "C").unwrap();
    let want = four_bar_closed_form(1.0, 1.0, 1.0, th);
    assert!((c[0] - want[0]).abs() < 1e-9 && (c[1] - want[1]).abs() < 1e-9, "{c:?} vs {want:?}");
    assert!((c[0] - 1.0).abs() < 1e-9 && (c[1] - 1.0).abs() < 1e-9);
    assert!(sol.residual <= 1e-9);

    // follow the open branch through a range of crank angles
    let mut prev = sol;
    for deg in (60..=150).step_by(5).map(f64::from) {
        let th = deg.to_radians();
        let sol = mech.solve_posture(&links, th, 0.0, &prev).unwrap();
        let c = mech.point(&sol, "C").unwrap();
        let want = four_bar_closed_form(1.0, 1.0, 1.0, th);
        assert!((c[0] - want[0]).abs() < 1e-9 && (c[1] - want[1]).abs() < 1e-9, "{deg}: {c:?} vs {want:?}");
        prev = sol;
    }
}

#[test]
fn unreachable_closure_does_not_converge() {
    let mech = Mechanism::<f64>::new(unit_four_bar(10.0)).unwrap();
    let th = std::f64::consts::FRAC_PI_2;
    let guess = guess_with(&mech, [1.1, 0.9], [0.0, 10.0], th);
    match mech.solve_posture(&[1.0, 1.0], th, 0.0, &guess) {
        Err(LinkageError::NonConvergent { .. }) => {}
        other => panic!("expected NonConvergent, got {other:?}"),
    }
}

#[test]
fn rigid_rack_torques_match_lever_arm() {
    let mech = Mechanism::<f64>::new(rack(10.0, 50.0)).unwrap();
    let start = mech.reference_solution().unwrap();
    let t = mech.sweep_transmission(&[10.0, 50.0], &SweepSpec::with_steps(30), &start).unwrap();
    for (m, p) in t.tau_mcp.iter().zip(&t.tau_pip) {
        assert!((m - 0.01).abs() < 1e-6, "{m}");
        assert!(p.abs() < 1e-6, "{p}");
    }
    assert!((t.tau_mcp_mean - 0.01).abs() < 1e-6);
    let want_lx = 10.0 * 80f64.to_radians();
    assert!((t.lx - want_lx).abs() < 1e-9);

    let scaled = Mechanism::<f64>::new(rack(20.0, 100.0)).unwrap();
    let start = scaled.reference_solution().unwrap();
    let t2 = scaled.sweep_transmission(&[20.0, 100.0], &SweepSpec::with_steps(30), &start).unwrap();
    assert!((t2.lx - 2.0 * t.lx).abs() < 1e-9);
}

#[test]
fn zero_range_sweep_has_no_stroke() {
    let mech = Mechanism::<f64>::new(rack(10.0, 50.0)).unwrap();
    let start = mech.reference_solution().unwrap();
    let sweep = SweepSpec { steps: 2, mcp_max_deg: 0.0, pip_max_deg: 0.0, force: 1.0 };
    let t = mech.sweep_transmission(&[10.0, 50.0], &sweep, &start).unwrap();
    assert_eq!(t.lx, 0.0);
    assert!(mech.sweep_transmission(&[10.0, 50.0], &SweepSpec::with_steps(1), &start).is_err());
}

#[test]
fn config_round_trips_and_rejects_bad_input() {
    let cfg = MechanismConfig::uhex_surrogate();
    assert_eq!(MechanismConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    let mut bad = cfg.clone();
    bad.schema_version = 99;
    assert!(MechanismConfig::from_json(&bad.to_json()).is_err());
    let mut short = cfg.clone();
    short.constraints.pop();
    assert!(matches!(Mechanism::<f64>::new(short), Err(LinkageError::Config(_))));
    let mut unknown = cfg;
    unknown.actuator = Some(["O".into(), "Z".into()]);
    assert!(Mechanism::<f64>::new(unknown).is_err());
}

#[test]
fn analytic_jacobian_matches_finite_differences() {
    let mech = Mechanism::<f64>::new(MechanismConfig::uhex_surrogate()).unwrap();
    let links = mech.config.reference_links().unwrap();
    let x = mech.reference_solution().unwrap().x;
    let (tm, tp) = (0.3, 0.4);
    let jac = mech.jacobian(&x, &links, tm, tp);
    let n = mech.unknowns();
    let h = 1e-6;
    for j in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let rp = mech.residual(&xp, &links, tm, tp);
        let rm = mech.residual(&xm, &links, tm, tp);
        for i in 0..n {
            let fd = (rp[i] - rm[i]) / (2.0 * h);
            assert!((fd - jac[i * n + j]).abs() < 1e-6, "J[{i},{j}] = {} vs {fd}", jac[i * n + j]);
        }
    }
}

#[test]
fn reference_assembly_sweeps_continuously() {
    let mech = Mechanism::<f64>::new(MechanismConfig::uhex_surrogate()).unwrap();
    let links = mech.config.reference_links().unwrap();
    let start = mech.reference_solution().unwrap();
    let postures = mech.sweep_postures(&links, &SweepSpec::with_steps(100), &start).unwrap();
    let mut worst = 0.0f64;
    for w in postures.windows(2) {
        assert!(w[1].residual <= 1e-9);
        for name in ["A", "B", "C", "D", "E", "F", "G", "H", "I", "J"] {
            let (p, q) = (mech.point(&w[0], name).unwrap(), mech.point(&w[1], name).unwrap());
            worst = worst.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
        }
    }
    assert!(worst < 5.0, "largest step displacement {worst} mm");
    let report = mech.report(&postures[0]);
    assert_eq!(report.points.len(), 12);
    assert_eq!(report.params.len(), 3);
    assert!(report.actuator_length.unwrap() > 0.0);
}

#[test]
fn torques_are_stable_under_refinement() {
    let coarse = UhexProblem::<f64>::with_sweep(UhexMode::Moop, 9, SweepSpec::with_steps(50)).unwrap();
    let fine = UhexProblem::<f64>::with_sweep(UhexMode::Moop, 9, SweepSpec::with_steps(200)).unwrap();
    let genomes = [coarse.bounds().midpoint(), vec![57.09, 10.0, 15.0, 15.0, 56.0, 100.0, 40.30, 16.0, 42.72]];
    for g in genomes {
        let a = coarse.transmission(&g).unwrap();
        let b = fine.transmission(&g).unwrap();
        for (x, y) in [(a.tau_mcp_mean, b.tau_mcp_mean), (a.tau_pip_mean, b.tau_pip_mean)] {
            assert!((x - y).abs() / y.abs() < 0.01, "{x} vs {y}");
        }
    }
}

#[test]
fn design_two_golden_values() {
    let g = [57.09, 10.0, 15.0, 15.0, 56.0, 100.0, 40.30, 16.0, 42.72];
    let e = evaluate_uhex(&g, UhexMode::Moop, 9).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
    assert!(close(-e.objectives[0], 0.1380545135614873), "{:?}", e.objectives);
    assert!(close(e.objectives[1], 9.382340285387935), "{:?}", e.objectives);
    assert!(close(e.objectives[2], 26.778030615643516), "{:?}", e.objectives);
    assert!(close(e.aux["tau_mcp"], 0.017384608464554023));
    assert!(close(e.aux["tau_pip"], 0.0016744402501448592));
    assert!(close(e.aux["c1_max"], 44.83257039767103));
    assert!(!e.feasible);
    assert!(close(e.violations[1], 44.83257039767103 - 35.0));
}

#[test]
fn single_precision_agrees_with_double() {
    let g = [57.09, 10.0, 15.0, 15.0, 56.0, 100.0, 40.30, 16.0, 42.72];
    let p64 = UhexProblem::<f64>::new(UhexMode::Moop, 9).unwrap();
    let p32 = UhexProblem::<f32>::new(UhexMode::Moop, 9).unwrap();
    let a = p64.transmission(&g).unwrap();
    let g32: Vec<f32> = g.iter().map(|&v| v as f32).collect();
    let b = p32.transmission(&g32).unwrap();
    assert!((a.lx - b.lx as f64).abs() < 1e-3);
    assert!((a.tau_mcp_mean - b.tau_mcp_mean as f64).abs() / a.tau_mcp_mean < 1e-3);
}

#[test]
fn sentinel_for_unassemblable_genome() {
    let p = UhexProblem::<f64>::with_sweep(UhexMode::Moop, 9, SweepSpec::with_steps(20)).unwrap();
    let mut rng = stream_rng(5, 0, 0);
    let mut found = false;
    for _ in 0..200 {
        let g = random_genome(p.bounds(), &mut rng);
        if p.transmission(&g).is_err() {
            let e = p.evaluate(&g);
            assert!(!e.feasible);
            assert_eq!(*e.violations.last().unwrap(), SENTINEL_VIOLATION);
            assert_eq!(e.objectives, vec![0.0, SENTINEL_VIOLATION, SENTINEL_VIOLATION]);
            assert_eq!(e.aux["solved"], 0.0);
            found = true;
            break;
        }
    }
    assert!(found, "no failing genome among 200 random draws");
}

#[test]
fn six_variable_mode_fixes_three_links() {
    let p = UhexProblem::<f64>::with_sweep(UhexMode::Soop, 6, SweepSpec::with_steps(20)).unwrap();
    assert_eq!(p.bounds().dim(), 6);
    let full = p.full_links(&[49.0, 20.0, 33.0, 33.0, 41.5, 82.0]);
    assert_eq!(&full[6..], &FIXED_SIX);
    assert!(p.transmission(&[1.0; 9]).is_err());
    assert!(UhexProblem::<f64>::new(UhexMode::Soop, 7).is_err());
}

#[test]
fn con7_feasible_implies_soop_feasible() {
    let sweep = SweepSpec::with_steps(20);
    let soop = UhexProblem::<f64>::with_sweep(UhexMode::Soop, 9, sweep).unwrap();
    let con7 = UhexProblem::<f64>::with_sweep(UhexMode::SoopCon7, 9, sweep).unwrap();
    let mut rng = stream_rng(11, 0, 0);
    let mut counts = BTreeMap::from([("con7", 0), ("soop", 0)]);
    for _ in 0..300 {
        let g = random_genome(soop.bounds(), &mut rng);
        let (a, b) = (soop.evaluate(&g), con7.evaluate(&g));
        if b.feasible {
            assert!(a.feasible);
            *counts.get_mut("con7").unwrap() += 1;
        }
        if a.feasible {
            *counts.get_mut("soop").unwrap() += 1;
        }
        assert_eq!(a.objectives, b.objectives);
    }
    assert!(counts["soop"] >= counts["con7"]);
}

#[test]
fn ratio_distance_is_symmetric() {
    assert_eq!(torque_ratio_distance(2.0, 1.0), 1.0);
    assert_eq!(torque_ratio_distance(1.0, 2.0), 1.0);
    assert_eq!(torque_ratio_distance(3.0, 3.0), 0.0);
    assert!(torque_ratio_distance(1.0, 0.0).is_infinite());
}

#[test]
fn slider_overrun_is_reported_as_violation() {
    // c1 peaking at 40 mm violates the 35 mm limit by 5
    let p = UhexProblem::<f64>::with_sweep(UhexMode::Moop, 9, SweepSpec::with_steps(20)).unwrap();
    let t = TransmissionResult {
        tau_mcp: vec![],
        tau_pip: vec![],
        tau_mcp_mean: 0.02,
        tau_pip_mean: 0.01,
        actuator: vec![],
        lx: 30.0,
        slider_min: vec![5.0, 5.0],
        slider_max: vec![40.0, 20.0],
    };
    let e = p.score(&t);
    assert_eq!(e.violations, vec![0.0, 5.0, 0.0, 0.0, 0.0]);
    assert!(!e.feasible);
    assert!((e.objectives[1] - 1.0).abs() < 1e-12);
}

#[test]
fn grid_resolution_one_is_the_midpoint() {
    let p = UhexProblem::<f64>::with_sweep(UhexMode::Soop, 6, SweepSpec::with_steps(20)).unwrap();
    let best = brute_force_grid(&p, 1).unwrap();
    assert_eq!(best.genome, p.bounds().midpoint());
    assert!(brute_force_grid(&p, 0).is_err());
    assert_eq!(grid_values(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
}

#[test]
fn nested_grids_never_get_worse() {
    use exopt::ea::deb_compare;
    use std::cmp::Ordering;
    let p = UhexProblem::<f64>::with_sweep(UhexMode::Soop, 6, SweepSpec::with_steps(20)).unwrap();
    // 1 ⊂ 3 ⊂ 5 and 2 ⊂ 5 points per axis
    let r1 = brute_force_grid(&p, 1).unwrap();
    let r2 = brute_force_grid(&p, 2).unwrap();
    let r3 = brute_force_grid(&p, 3).unwrap();
    let r5 = brute_force_grid(&p, 5).unwrap();
    assert_ne!(deb_compare(&r1, &r3), Ordering::Less);
    assert_ne!(deb_compare(&r2, &r5), Ordering::Less);
    assert_ne!(deb_compare(&r3, &r5), Ordering::Less);
}

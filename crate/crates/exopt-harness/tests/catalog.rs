use exopt::base::Direction;
use exopt::moea::dominates;
use exopt_harness::aggregate::NondominatedSet;
use exopt_harness::catalog::{chebyshev_to_ideal, select_designs, Label};
use exopt_harness::HarnessError;

fn uhex_set(points: &[Vec<f64>]) -> NondominatedSet {
    NondominatedSet::from_points(
        vec!["obj1".into(), "obj2".into(), "obj3".into()],
        vec![Direction::Maximize, Direction::Minimize, Direction::Minimize],
        points,
    )
}

fn index(catalog: &exopt_harness::catalog::DesignCatalog, label: Label) -> Option<usize> {
    catalog.get(label).map(|e| e.index)
}

#[test]
fn threshold_filters_before_argmax() {
    let set = uhex_set(&[vec![10.0, 1.0, 20.0], vec![30.0, 0.5, 60.0]]);
    let c = select_designs(&set, 50.0).unwrap();
    let obj1 = |label| c.get(label).unwrap().objectives[0];
    assert_eq!(obj1(Label::MaxObj1), 30.0);
    assert_eq!(obj1(Label::MaxObj1FeasibleActuator), 10.0);
    assert_eq!(c.get(Label::MaxObj1FeasibleActuator).unwrap().lx, Some(20.0));
    assert!(c.flags.is_empty());
}

#[test]
fn singleton_gets_every_label() {
    let set = uhex_set(&[vec![1.0, 2.0, 3.0]]);
    let c = select_designs(&set, 50.0).unwrap();
    assert_eq!(c.entries.len(), 5);
    assert!(c.entries.iter().all(|e| e.index == 0));
}

#[test]
fn missing_constrained_label_is_flagged() {
    let set = uhex_set(&[vec![1.0, 2.0, 70.0], vec![2.0, 3.0, 80.0]]);
    let c = select_designs(&set, 50.0).unwrap();
    assert!(c.get(Label::MaxObj1FeasibleActuator).is_none());
    assert_eq!(c.flags.len(), 1);
    assert!(c.flags[0].starts_with("max_obj1_feasible_actuator"));
}

#[test]
fn aux_stroke_takes_precedence_over_obj3() {
    let mut set = uhex_set(&[vec![5.0, 1.0, 10.0], vec![9.0, 2.0, 5.0]]);
    set.members[1].aux.insert("Lx".into(), 55.0);
    let c = select_designs(&set, 50.0).unwrap();
    assert_eq!(c.get(Label::MaxObj1FeasibleActuator).unwrap().objectives[0], 5.0);
}

#[test]
fn ties_fall_through_to_the_next_objective_then_run() {
    // equal obj1: lower obj2 wins
    let set = uhex_set(&[vec![5.0, 2.0, 1.0], vec![5.0, 1.0, 9.0]]);
    let c = select_designs(&set, 50.0).unwrap();
    assert_eq!(index(&c, Label::MaxObj1), Some(1));
    // equal obj2: next is obj3
    let set = uhex_set(&[vec![9.0, 1.0, 4.0], vec![1.0, 1.0, 3.0]]);
    let c = select_designs(&set, 50.0).unwrap();
    assert_eq!(index(&c, Label::MinObj2), Some(1));
    // equal obj3: wraps to obj1
    let set = uhex_set(&[vec![1.0, 1.0, 3.0], vec![2.0, 5.0, 3.0]]);
    let c = select_designs(&set, 50.0).unwrap();
    assert_eq!(index(&c, Label::MinObj3), Some(1));
    // identical vectors: lowest run index
    let mut set = uhex_set(&[vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 1.0]]);
    set.members[0].provenance[0].run = 7;
    let c = select_designs(&set, 50.0).unwrap();
    assert_eq!(index(&c, Label::MaxObj1), Some(1));
}

#[test]
fn balanced_minimizes_normalized_chebyshev_distance() {
    // extremes sit at distance 1; the middle point at 0.5
    let set = uhex_set(&[vec![10.0, 10.0, 10.0], vec![5.0, 5.0, 5.0], vec![0.0, 0.0, 0.0]]);
    let canonical = set.canonical();
    let d = chebyshev_to_ideal(&canonical);
    assert_eq!(d, vec![1.0, 0.5, 1.0]);
    let c = select_designs(&set, 50.0).unwrap();
    assert_eq!(index(&c, Label::Balanced), Some(1));
}

#[test]
fn entries_are_nondominated_members() {
    let pts: Vec<Vec<f64>> =
        (0..20).map(|i| f64::from(i)).map(|t| vec![t, (t - 7.0).powi(2) / 10.0, 2.5 * t]).collect();
    let set = uhex_set(&pts);
    let canonical = set.canonical();
    let c = select_designs(&set, 30.0).unwrap();
    for e in &c.entries {
        assert_eq!(set.members[e.index].objectives, e.objectives);
        assert!(canonical.iter().all(|q| !dominates(q, &canonical[e.index])));
    }
    assert!(c.get(Label::MaxObj1FeasibleActuator).unwrap().lx.unwrap() <= 30.0);
}

#[test]
fn empty_set_is_an_error() {
    let set = uhex_set(&[]);
    assert!(matches!(select_designs(&set, 50.0), Err(HarnessError::EmptySet)));
}

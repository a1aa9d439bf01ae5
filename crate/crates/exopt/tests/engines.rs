use std::cmp::Ordering;

use exopt::base::{stream_rng, Bounds, Evaluation, Individual};
use exopt::benchmarks::{BiObjective, Sphere};
use exopt::ea::*;
use exopt::moea::*;

fn feasible(f: f64) -> Individual<f64> {
    Individual { genome: vec![f], evaluation: Some(Evaluation::unconstrained(vec![f])), born: 0 }
}

#[test]
fn tournament_frequencies_follow_closed_form() {
    // Member of rank k (1 = best) wins iff drawn with a worse one: P = 2(n−k) / (n(n−1)).
    let pop: Vec<_> = [3.0, 1.0, 4.0, 2.0].into_iter().map(feasible).collect();
    let n = pop.len();
    let trials = 10_000;
    let mut counts = [0usize; 4];
    let mut rng = stream_rng(42, 0, 0);
    for _ in 0..trials {
        let w = binary_tournament(&pop, deb_compare, &mut rng).unwrap();
        counts[pop[w].genome[0] as usize - 1] += 1;
    }
    for (k, &c) in counts.iter().enumerate() {
        let p = 2.0 * (n - (k + 1)) as f64 / (n * (n - 1)) as f64;
        let expect = p * trials as f64;
        let sd = (trials as f64 * p * (1.0 - p)).sqrt().max(1.0);
        assert!((c as f64 - expect).abs() < 5.0 * sd, "rank {}: {c} vs {expect}", k + 1);
    }
    assert!(counts.windows(2).all(|w| w[0] > w[1]));
}

#[test]
fn tournament_on_identical_members_is_uniform() {
    let pop: Vec<_> = (0..5).map(|_| feasible(1.0)).collect();
    let mut counts = [0usize; 5];
    let mut rng = stream_rng(7, 0, 0);
    for _ in 0..10_000 {
        counts[binary_tournament(&pop, deb_compare, &mut rng).unwrap()] += 1;
    }
    assert!(counts.iter().all(|&c| (c as f64 - 2000.0).abs() < 200.0), "{counts:?}");
}

#[test]
fn blx_samples_fill_the_extended_interval() {
    let b = Bounds::new(vec![-100.0], vec![100.0]).unwrap();
    let mut rng = stream_rng(1, 0, 0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..5_000 {
        let (c1, c2) = blx_alpha_crossover(&[0.0], &[10.0], 0.5, &b, &mut rng);
        for v in [c1[0], c2[0]] {
            assert!((-5.0..=15.0).contains(&v));
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    assert!((lo + 5.0).abs() < 0.2 && (hi - 15.0).abs() < 0.2, "{lo} {hi}");
}

#[test]
fn polynomial_mutation_perturbation_is_small() {
    let b = Bounds::new(vec![0.0], vec![1.0]).unwrap();
    let mut rng = stream_rng(2, 0, 0);
    let mut total = 0.0;
    for i in 0..10_000 {
        let x = (i as f64 + 0.5) / 10_000.0;
        total += (polynomial_mutation(&[x], 1.0, 20.0, &b, &mut rng)[0] - x).abs();
    }
    assert!(total / 10_000.0 < 0.05);
}

#[test]
fn bang_spread_matches_formula() {
    let b = Bounds::new(vec![-1000.0], vec![1000.0]).unwrap();
    let mut rng = stream_rng(3, 0, 0);
    let xs: Vec<f64> = (0..10_000).map(|_| bang_one(&[0.0], 50, &b, 1.0, &mut rng)[0]).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
    let want = 2000.0 / 50.0;
    assert!((sd - want).abs() < 0.1 * want, "{sd} vs {want}");

    let spread = |it: usize| {
        let mut rng = stream_rng(4, 0, 0);
        (0..1000).map(|_| bang_one(&[0.0], it, &b, 1.0, &mut rng)[0].abs()).sum::<f64>()
    };
    assert!(spread(10) < spread(2));
    // same normal draws at doubled iteration give exactly half the offset
    let x20 = bang_one(&[0.0], 20, &b, 1.0, &mut stream_rng(9, 0, 0))[0];
    let x40 = bang_one(&[0.0], 40, &b, 1.0, &mut stream_rng(9, 0, 0))[0];
    assert_eq!(x20, 2.0 * x40);
}

#[test]
fn sphere_runs_converge_and_repeat() {
    let p = Sphere::new(5, 5.0);
    for seed in 0..3 {
        let (a, ha) = run_ga(&p, &GaParams::default(), seed).unwrap();
        let (b, hb) = run_bbbc(&p, &BbbcParams::default(), seed).unwrap();
        assert!(a.eval().objectives[0] <= 1e-3);
        assert!(b.eval().objectives[0] <= 1e-3);
        assert!(ha.best.windows(2).all(|w| w[1] <= w[0]));
        assert!(hb.best.windows(2).all(|w| w[1] <= w[0]));
        let (a2, ha2) = run_ga(&p, &GaParams::default(), seed).unwrap();
        assert_eq!(a, a2);
        assert_eq!(ha.best, ha2.best);
    }
}

#[test]
fn weighted_center_crunch_runs() {
    let p = Sphere::new(5, 5.0);
    let params = BbbcParams { crunch_mode: CrunchMode::WeightedCenter, ..BbbcParams::default() };
    let (best, h) = run_bbbc(&p, &params, 1).unwrap();
    assert_eq!(h.len(), params.generations + 1);
    assert!(best.eval().objectives[0] < h.best[0]);
}

fn brute_ranks(objs: &[Vec<f64>]) -> Vec<usize> {
    let n = objs.len();
    let mut rank = vec![usize::MAX; n];
    let mut r = 0;
    while rank.contains(&usize::MAX) {
        let current: Vec<usize> = (0..n)
            .filter(|&i| rank[i] == usize::MAX)
            .filter(|&i| !(0..n).any(|j| rank[j] == usize::MAX && dominates(&objs[j], &objs[i])))
            .collect();
        for i in current {
            rank[i] = r;
        }
        r += 1;
    }
    rank
}

#[test]
fn sorting_and_strength_match_brute_force() {
    let mut rng = stream_rng(11, 0, 0);
    for trial in 0..30 {
        use rand::Rng;
        let n = rng.random_range(1..120);
        let m = 2 + trial % 2;
        let objs: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| f64::from(rng.random_range(0..8))).collect()).collect();
        let evals: Vec<Evaluation<f64>> = objs.iter().map(|o| Evaluation::unconstrained(o.clone())).collect();
        let refs: Vec<&Evaluation<f64>> = evals.iter().collect();
        assert_eq!(nondominated_ranks(&refs), brute_ranks(&objs));
        let sp = sp_fitness(&refs);
        for i in 0..n {
            let s = (0..n).filter(|&j| dominates(&objs[i], &objs[j])).count();
            assert_eq!(sp.strength[i], s);
            let r: usize = (0..n)
                .filter(|&j| dominates(&objs[j], &objs[i]))
                .map(|j| (0..n).filter(|&k| dominates(&objs[j], &objs[k])).count())
                .sum();
            assert_eq!(sp.raw[i], r);
        }
    }
}

#[test]
fn survival_keeps_rank_zero_when_room() {
    let mut rng = stream_rng(5, 0, 0);
    use rand::Rng;
    let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
        let o = vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        Individual { genome: o.clone(), evaluation: Some(Evaluation::unconstrained(o)), born: 0 }
    };
    for _ in 0..10 {
        let parents: Vec<_> = (0..30).map(|_| mk(&mut rng)).collect();
        let offspring: Vec<_> = (0..30).map(|_| mk(&mut rng)).collect();
        let mut all = parents.clone();
        all.extend(offspring.clone());
        let front: Vec<Vec<f64>> = {
            let evals: Vec<&Evaluation<f64>> = all.iter().map(|i| i.eval()).collect();
            let ranks = nondominated_ranks(&evals);
            all.iter().zip(ranks).filter(|(_, r)| *r == 0).map(|(i, _)| i.genome.clone()).collect()
        };
        let mu = 30.max(front.len());
        for out in [
            ns_survival(parents.clone(), offspring.clone(), mu).unwrap(),
            sp_survival(parents.clone(), offspring.clone(), mu).unwrap(),
        ] {
            assert_eq!(out.len(), mu);
            for g in &front {
                assert!(out.members.iter().any(|m| &m.genome == g));
            }
        }
        // survivors of survivors
        let once = ns_survival(parents.clone(), offspring.clone(), mu).unwrap();
        let twice = ns_survival(once.members.clone(), Vec::new(), mu).unwrap();
        let mut a: Vec<_> = once.members.iter().map(|m| m.genome.clone()).collect();
        let mut b: Vec<_> = twice.members.iter().map(|m| m.genome.clone()).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
        b.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
        assert_eq!(a, b);
    }
}

#[test]
fn moeas_land_on_the_analytic_front() {
    let p = BiObjective::<f64>::default();
    for engine in [Engine::Ga, Engine::Bbbc] {
        for survival in [Survival::Ns, Survival::Sp] {
            let params = MoeaParams { pop_size: 100, generations: 40, ..MoeaParams::new(engine, survival) };
            let (front, history) = run_moea(&p, &params, 3).unwrap();
            assert_eq!(history.len(), params.generations + 1);
            for m in &front.members {
                let (f1, f2) = (m.eval().objectives[0], m.eval().objectives[1]);
                let on_front = (f1.sqrt() - 2.0).powi(2);
                assert!((f2 - on_front).abs() < 1e-2, "{}: ({f1}, {f2})", params.name());
                assert!(m.genome[0] >= -1e-2 && m.genome[0] <= 2.0 + 1e-2);
            }
            for a in &front.members {
                for b in &front.members {
                    assert!(!dominates(&a.eval().objectives, &b.eval().objectives));
                }
            }
            let (again, _) = run_moea(&p, &params, 3).unwrap();
            assert_eq!(front, again);
        }
    }
}

#[test]
fn single_objective_moea_collapses_to_best() {
    let p = Sphere::new(2, 5.0);
    let params = MoeaParams { pop_size: 40, generations: 30, ..MoeaParams::new(Engine::Ga, Survival::Ns) };
    let (front, _) = run_moea(&p, &params, 0).unwrap();
    let best = front.members[0].eval().objectives[0];
    assert!(front.members.iter().all(|m| m.eval().objectives[0] == best));
    assert!(best < 1e-2);
}

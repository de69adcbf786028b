use super::*;
use crate::analytics;
use crate::model::PeriodBounds;

fn subchain(label: &str, cost: f64, w3: f64, parallelizable: bool) -> S1Subchain {
    S1Subchain {
        label: label.into(),
        cost_sum_ms: cost,
        cost_max_ms: cost,
        parallelizable,
        period_weight: w3,
        bounds: PeriodBounds::default(),
    }
}

fn problem(subchains: Vec<S1Subchain>, chains: Vec<S1Chain>, cores: usize) -> Stage1Problem {
    Stage1Problem {
        subchains,
        chains,
        cores,
        relax_scale: 2.0,
        relax_cap: 8.0,
        config_guard: 10_000_000,
    }
}

#[test]
fn enumerate_counts_match_hand_enumeration() {
    assert_eq!(enumerate_a1_configurations(2, 1).unwrap().len(), 1);
    assert_eq!(enumerate_a1_configurations(2, 2).unwrap().len(), 2);
    assert_eq!(enumerate_a1_configurations(3, 2).unwrap().len(), 6);
    assert_eq!(count_a1_configurations(2, 1), 1);
    assert_eq!(count_a1_configurations(2, 2), 2);
    assert_eq!(count_a1_configurations(3, 2), 6);
}

#[test]
fn enumerate_yields_only_valid_configurations() {
    let p = problem(
        vec![
            subchain("a", 1.0, 1.0, false),
            subchain("b", 2.0, 1.0, false),
            subchain("c", 3.0, 1.0, true),
        ],
        vec![],
        3,
    );
    let all = enumerate_a1_configurations(3, 3).unwrap();
    assert!(!all.is_empty());
    for m in &all {
        let report = check_allocation(&p, m).unwrap();
        assert!(
            report.violations.iter().all(|v| !v.is_structural()),
            "structural violation in {m}"
        );
    }
    // count formula agrees with the generator
    assert_eq!(all.len() as u64, count_a1_configurations(3, 3));
}

#[test]
fn check_two_exclusive_subchains() {
    let p = problem(
        vec![subchain("a", 10.0, 1.0, false), subchain("b", 10.0, 1.0, false)],
        vec![],
        2,
    );
    let m = AllocMatrix::from_rows(&[vec![true, false], vec![false, true]]);
    let r = check_allocation(&p, &m).unwrap();
    assert!(r.feasible());
    let t = r.tight.unwrap();
    assert_eq!(t.period_ms, vec![10.0, 10.0]);
    assert_eq!(t.objective, 20.0);
}

#[test]
fn check_overlapping_exclusives_is_structural_violation() {
    let p = problem(
        vec![subchain("a", 10.0, 1.0, false), subchain("b", 10.0, 1.0, false)],
        vec![],
        2,
    );
    let m = AllocMatrix::from_rows(&[vec![true, true], vec![true, true]]);
    let r = check_allocation(&p, &m).unwrap();
    assert!(!r.feasible());
    assert!(r.tight.is_none());
    assert!(r
        .violations
        .iter()
        .any(|v| matches!(v, ConstraintViolation::ExclusiveOverlap { .. }) && v.code() == 9));
}

#[test]
fn check_shared_core_periods_scale_with_residents() {
    let p = problem(
        vec![
            subchain("a", 5.0, 1.0, false),
            subchain("b", 5.0, 1.0, false),
            subchain("c", 20.0, 1.0, false),
        ],
        vec![],
        2,
    );
    let m = AllocMatrix::from_rows(&[
        vec![true, false],
        vec![true, false],
        vec![false, true],
    ]);
    let r = check_allocation(&p, &m).unwrap();
    assert!(r.feasible());
    let t = r.tight.unwrap();
    assert_eq!(t.period_ms, vec![10.0, 10.0, 20.0]);
    // shared subchains run as long as their period
    assert_eq!(t.execution_ms, vec![10.0, 10.0, 20.0]);
}

#[test]
fn check_dimension_mismatch() {
    let p = problem(vec![subchain("a", 1.0, 1.0, false)], vec![], 2);
    let m = AllocMatrix::new(2, 2);
    assert!(matches!(
        check_allocation(&p, &m),
        Err(crate::Error::DimensionMismatch { .. })
    ));
}

#[test]
fn solve_two_subchains_two_cores_stay_exclusive() {
    let p = problem(
        vec![subchain("a", 10.0, 1.0, false), subchain("b", 10.0, 1.0, false)],
        vec![],
        2,
    );
    let a = solve_core_allocation(&p).unwrap();
    assert_eq!(a.objective, 20.0);
    assert_eq!(a.matrix.shared_core_count(), 0);
    assert!(a.warnings.is_empty());
}

#[test]
fn solve_three_subchains_two_cores_shares_the_cheap_pair() {
    let p = problem(
        vec![
            subchain("a", 5.0, 1.0, false),
            subchain("b", 5.0, 1.0, false),
            subchain("c", 20.0, 1.0, false),
        ],
        vec![],
        2,
    );
    let a = solve_core_allocation(&p).unwrap();
    assert_eq!(a.objective, 40.0);
    // a and b share; c is alone
    assert_eq!(a.matrix.cores_of(0), a.matrix.cores_of(1));
    assert_ne!(a.matrix.cores_of(0), a.matrix.cores_of(2));
}

#[test]
fn solve_parallelizable_singleton_uses_both_cores() {
    let mut s = subchain("a", 80.0, 1.0, true);
    s.cost_max_ms = 40.0;
    let p = problem(vec![s], vec![], 2);
    let a = solve_core_allocation(&p).unwrap();
    assert_eq!(a.matrix.core_count_of(0), 2);
    assert_eq!(a.period_ms[0], 40.0);
    assert!(a.multi_core[0]);
}

#[test]
fn solver_output_passes_checker() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
    for _ in 0..40 {
        let n = rng.gen_range(1..5);
        let k = rng.gen_range(1..4);
        let subs: Vec<S1Subchain> = (0..n)
            .map(|i| {
                let mut s = subchain(
                    &format!("s{i}"),
                    rng.gen_range(1.0..50.0),
                    rng.gen_range(0.0..2.0),
                    rng.gen_bool(0.5),
                );
                s.cost_max_ms = s.cost_sum_ms * rng.gen_range(0.4..1.0);
                s
            })
            .collect();
        let p = problem(subs, vec![], k);
        let a = solve_core_allocation(&p).unwrap();
        let r = check_allocation(&p, &a.matrix).unwrap();
        assert!(r.feasible(), "{}", a.matrix);
        assert!((r.tight.unwrap().objective - a.objective).abs() < 1e-9);
    }
}

#[test]
fn solver_matches_full_enumeration_minimum() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(12);
    for _ in 0..25 {
        let n = rng.gen_range(1..5usize);
        let k = rng.gen_range(1..4usize);
        let subs: Vec<S1Subchain> = (0..n)
            .map(|i| subchain(&format!("s{i}"), rng.gen_range(1.0..50.0), 1.0, rng.gen_bool(0.3)))
            .collect();
        let p = problem(subs, vec![], k);
        let solved = solve_core_allocation(&p).unwrap();
        let mut best = f64::INFINITY;
        for m in enumerate_a1_configurations(n, k).unwrap() {
            let r = check_allocation(&p, &m).unwrap();
            if r.feasible() {
                best = best.min(r.tight.unwrap().objective);
            }
        }
        assert!((solved.objective - best).abs() < 1e-9);
    }
}

#[test]
fn chain_latency_drives_allocation() {
    // one chain over both subchains, latency-weighted only
    let subs = vec![subchain("a", 10.0, 0.0, false), subchain("b", 10.0, 0.0, false)];
    let chains = vec![S1Chain {
        label: "c".into(),
        latency_weight: 1.0,
        period_weight: 1.0,
        first: S1First::Var(0),
        rest: vec![S1Rest::Var(1)],
        period_bounds: PeriodBounds::default(),
        latency_bounds: PeriodBounds::default(),
    }];
    let p = problem(subs, chains, 2);
    let a = solve_core_allocation(&p).unwrap();
    // exclusive: latency = 10 + (10 + 10) = 30, period 10, objective 40
    assert_eq!(a.objective, 40.0);
}

#[test]
fn streaming_source_chains_use_observed_constant() {
    let subs = vec![subchain("gm", 10.0, 0.0, false)];
    let chains = vec![S1Chain {
        label: "c".into(),
        latency_weight: 1.0,
        period_weight: 1.0,
        first: S1First::Const(600.0),
        rest: vec![S1Rest::Var(0)],
        period_bounds: PeriodBounds::default(),
        latency_bounds: PeriodBounds::default(),
    }];
    let p = problem(subs, chains, 1);
    let a = solve_core_allocation(&p).unwrap();
    // latency = 600 + (10 + 10), period = 600
    assert_eq!(a.objective, 620.0 + 600.0);
}

#[test]
fn period_floor_from_throughput_cap_is_folded_in() {
    let mut s = subchain("a", 10.0, 1.0, false);
    s.bounds = PeriodBounds {
        lo_ms: 25.0,
        hi_ms: f64::INFINITY,
    };
    let p = problem(vec![s], vec![], 1);
    let a = solve_core_allocation(&p).unwrap();
    assert_eq!(a.period_ms[0], 25.0);
    assert!(a.warnings.is_empty());
}

#[test]
fn unsatisfiable_bound_relaxes_with_warnings() {
    // tight period is 10 but the cap asks for at most 4 ms
    let mut s = subchain("a", 10.0, 1.0, false);
    s.bounds = PeriodBounds {
        lo_ms: 0.0,
        hi_ms: 4.0,
    };
    let p = problem(vec![s], vec![], 1);
    let a = solve_core_allocation(&p).unwrap();
    assert!(!a.warnings.is_empty());
    assert_eq!(a.period_ms[0], 10.0);
}

#[test]
fn relaxation_cap_is_an_error() {
    let mut s = subchain("a", 1000.0, 1.0, false);
    s.bounds = PeriodBounds {
        lo_ms: 0.0,
        hi_ms: 1.0,
    };
    let p = problem(vec![s], vec![], 1);
    assert!(matches!(
        solve_core_allocation(&p),
        Err(crate::Error::InfeasibleAfterRelaxation { .. })
    ));
}

#[test]
fn relaxation_rounds_decrease_infeasibility() {
    // two bounds, only one of which can be met after one round
    let mut a = subchain("a", 16.0, 1.0, false);
    a.bounds = PeriodBounds {
        lo_ms: 0.0,
        hi_ms: 10.0,
    };
    let mut b = subchain("b", 30.0, 1.0, false);
    b.bounds = PeriodBounds {
        lo_ms: 0.0,
        hi_ms: 20.0,
    };
    let p = problem(vec![a, b], vec![], 2);
    let solved = solve_core_allocation(&p).unwrap();
    // both exclusive: periods 16 and 30; caps relax to 20 and 40
    assert_eq!(solved.period_ms, vec![16.0, 30.0]);
    assert_eq!(solved.warnings.len(), 2);
}

#[test]
fn exclusive_period_encoding_matches_pipeline_formula() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(13);
    for _ in 0..60 {
        let m = rng.gen_range(1..6usize);
        let nodes = rng.gen_range(1..4usize);
        let costs: Vec<f64> = (0..nodes).map(|_| rng.gen_range(1.0..30.0)).collect();
        let mut s = subchain("a", costs.iter().sum(), 1.0, true);
        s.cost_max_ms = costs.iter().cloned().fold(0.0, f64::max);
        let p = problem(vec![s.clone()], vec![], m);
        let mat = AllocMatrix::from_rows(&[vec![true; m]]);
        let tight = check_allocation(&p, &mat).unwrap().tight.unwrap();

        // independent route: best pipelined period over divisors of m with
        // perfectly scaled per-node costs
        let best = (1..=m as u32)
            .filter(|q| m as u32 % q == 0)
            .map(|q| {
                let scaled: Vec<f64> = costs.iter().map(|c| c / q as f64).collect();
                analytics::pipelined_period(&scaled, m as u32, q).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(
            (tight.period_ms[0] - best).abs() < 1e-9,
            "m={m} costs={costs:?} tight={} best={best}",
            tight.period_ms[0]
        );
    }
}

mod common;

use nearopt::lp::mps::{parse_mps, to_mps_string};
use nearopt::lp::{solve, SolveStatus, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL};
use proptest::prelude::*;

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut optimal = 0;
    let mut infeasible = 0;
    for seed in 0..120u64 {
        let n = 2 + (seed as usize % 5);
        let m = 1 + (seed as usize * 7 % 8);
        let lp = common::random_bounded_lp(seed, n, m);
        let sol = solve(&lp, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
        match common::brute_force_min(&lp) {
            Some(best) => {
                assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}");
                assert!(
                    (sol.objective_value - best).abs() <= 1e-7 * (1.0 + best.abs()),
                    "seed {seed}: solver {} oracle {best}",
                    sol.objective_value
                );
                assert!(lp.max_violation(&sol.x) <= 1e-7, "seed {seed}");
                optimal += 1;
            }
            None => {
                assert_eq!(sol.status, SolveStatus::Infeasible, "seed {seed}");
                infeasible += 1;
            }
        }
    }
    assert!(optimal >= 50, "only {optimal} feasible instances");
    assert!(infeasible > 0);
}

#[test]
fn largest_corpus_shape_matches_oracle() {
    for seed in 1000..1006u64 {
        let lp = common::random_lp(seed, 10, 12, false);
        let sol = solve(&lp, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
        match common::brute_force_min(&lp) {
            Some(best) => assert!((sol.objective_value - best).abs() <= 1e-7 * (1.0 + best.abs())),
            None => assert_eq!(sol.status, SolveStatus::Infeasible),
        }
    }
}

#[test]
fn solves_are_deterministic() {
    let lp = common::random_bounded_lp(7, 8, 10);
    let a = solve(&lp, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
    let b = solve(&lp, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
    assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
}

#[test]
fn mps_round_trip_preserves_the_problem() {
    for seed in 0..20u64 {
        let lp = common::random_bounded_lp(seed, 6, 5);
        let text = to_mps_string(&lp, "RANDOM");
        let back = parse_mps(&text).unwrap();
        assert_eq!(back.n_vars(), lp.n_vars());
        assert_eq!(back.n_rows(), lp.n_rows());
        let a = solve(&lp, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
        let b = solve(&back, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
        assert_eq!(a.status, b.status);
        if a.is_optimal() {
            assert!((a.objective_value - b.objective_value).abs() < 1e-6 * (1.0 + a.objective_value.abs()));
        }
    }
}

#[test]
fn mps_output_matches_golden_file() {
    use nearopt::lp::{LpBuilder, RowSense};
    let mut b = LpBuilder::new();
    let pv = b.add_column("pv_capacity", 47.61, 0.0, f64::INFINITY);
    let gen = b.add_column("pv_dispatch", 0.0, 0.0, f64::INFINITY);
    let fx = b.add_column("fixed", 1.0 / 3.0, 2.5, 2.5);
    let fr = b.add_column("free", 0.0, f64::NEG_INFINITY, f64::INFINITY);
    b.add_row("avail", RowSense::Le, 0.0, &[(gen, 1.0), (pv, -0.29)]);
    b.add_row("load", RowSense::Eq, 12.5, &[(gen, 1.0), (fr, 1.0)]);
    b.add_row("floor", RowSense::Ge, -1e-3, &[(fr, 2.0), (fx, 1.0)]);
    let text = to_mps_string(&b.build().unwrap(), "GOLDEN");
    let golden = include_str!("golden/small.mps");
    assert_eq!(text, golden);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn objective_scaling_keeps_argmin(seed in 0u64..10_000, lambda in 0.01f64..100.0) {
        let lp = common::random_bounded_lp(seed, 5, 4);
        let base = solve(&lp, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
        prop_assume!(base.is_optimal());
        let scaled_obj: Vec<f64> = lp.objective().iter().map(|c| c * lambda).collect();
        let scaled = lp.with_objective_vector(scaled_obj).unwrap();
        let s = solve(&scaled, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
        prop_assert!(s.is_optimal());
        prop_assert!(lp.max_violation(&s.x) <= 1e-7);
        let tol = 1e-7 * (1.0 + (lambda * base.objective_value).abs());
        prop_assert!((s.objective_value - lambda * base.objective_value).abs() <= tol);
    }

    #[test]
    fn cost_cap_at_optimum_reproduces_it(seed in 0u64..10_000, eps in 0.0f64..0.5) {
        let lp = common::random_bounded_lp(seed, 5, 4);
        let base = solve(&lp, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
        prop_assume!(base.is_optimal() && base.objective_value > 1e-3);
        let capped = lp.add_cost_cap(base.objective_value * (1.0 + eps));
        let s = solve(&capped, DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL).unwrap();
        prop_assert!(s.is_optimal());
        prop_assert!((s.objective_value - base.objective_value).abs() <= 1e-7 * base.objective_value.abs().max(1.0));
    }
}

//! Property tests over random small instances.

mod common;

use common::{dist_sq, random_feasible, random_instance};
use priceopt::io::{adjusted_gap, instance_to_string, parse_instance};
use priceopt::{gpa, model, oracle, projection, SolverParams};
use proptest::prelude::*;
use std::path::Path;

fn instance_args() -> impl Strategy<Value = (u64, usize, usize, bool, bool)> {
    (any::<u64>(), 1usize..=7, any::<bool>(), any::<bool>())
        .prop_flat_map(|(seed, n, bounded, mixed)| (Just(seed), Just(n), 1..=n, Just(bounded), Just(mixed)))
}

fn query(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-5.0f64..12.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projection_is_feasible_and_nearest((seed, n, k, bounded, mixed) in instance_args(), q in query(7)) {
        let inst = random_instance(seed, n, k, bounded, mixed);
        let q = &q[..n];
        let p = projection::project_feasible(&inst, q).unwrap();
        prop_assert!(projection::is_feasible(&inst, &p));
        let d = dist_sq(&p, q);
        prop_assert!(d <= dist_sq(inst.p0(), q) + 1e-12);
        for s in 0..20 {
            let other = random_feasible(seed ^ s, &inst);
            prop_assert!(d <= dist_sq(&other, q) + 1e-12);
        }
        let brute = oracle::brute_projection(&inst, q).unwrap();
        prop_assert!((d - dist_sq(&brute, q)).abs() <= 1e-10);
    }

    #[test]
    fn projection_fixes_feasible_points((seed, n, k, bounded, mixed) in instance_args()) {
        let inst = random_instance(seed, n, k, bounded, mixed);
        let p = random_feasible(seed.wrapping_add(1), &inst);
        prop_assert_eq!(projection::project_feasible(&inst, &p).unwrap(), p);
    }

    #[test]
    fn sparse_products_match_dense((seed, n, k, bounded, mixed) in instance_args(), x in query(7)) {
        let inst = random_instance(seed, n, k, bounded, mixed);
        let x = &x[..n];
        let dense = inst.dense_s() * nalgebra::DVector::from_column_slice(x);
        for (a, b) in inst.s_mul(x).iter().zip(dense.iter()) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let dt = inst.d_transpose().mul_vec(x);
        let mut by_col = vec![0.0; n];
        for (i, j, v) in inst.d().triplets() {
            by_col[j] += v * x[i];
        }
        for (a, b) in dt.iter().zip(&by_col) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn profit_and_objective_differ_by_constant((seed, n, k, bounded, mixed) in instance_args()) {
        let inst = random_instance(seed, n, k, bounded, mixed);
        let p = random_feasible(seed, &inst);
        let z = model::profit_z(&inst, &p).unwrap();
        let q = model::objective_q(&inst, &p).unwrap();
        prop_assert!((z + q + model::profit_constant(&inst)).abs() <= 1e-9 * z.abs().max(1.0));
    }

    #[test]
    fn instance_text_round_trips((seed, n, k, bounded, mixed) in instance_args()) {
        let inst = random_instance(seed, n, k, bounded, mixed);
        let text = instance_to_string(&inst);
        let back = parse_instance(&text, Path::new("mem")).unwrap();
        prop_assert_eq!(instance_to_string(&back), text);
        prop_assert_eq!(back.p0(), inst.p0());
        prop_assert_eq!(back.d(), inst.d());
    }

    #[test]
    fn adjusted_gap_is_antisymmetric(base in -1e6f64..1e6, a in -1e6f64..1e6, b in -1e6f64..1e6) {
        prop_assume!(base != 0.0);
        prop_assert_eq!(adjusted_gap(base, a, b).unwrap(), -adjusted_gap(base, b, a).unwrap());
        prop_assert_eq!(adjusted_gap(base, a, a).unwrap(), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn solver_descends_and_lands_between_baseline_and_optimum((seed, n, k, bounded, mixed) in instance_args()) {
        let inst = random_instance(seed, n, k.min(3), bounded, mixed);
        let run = gpa::multi_start(&inst, &SolverParams::default()).unwrap();
        let q0 = model::objective_q(&inst, inst.p0()).unwrap();
        let best = oracle::global_optimum(&inst).unwrap();
        for r in &run.reports {
            prop_assert!(projection::is_feasible(&inst, &r.final_p));
            prop_assert!(r.stationary, "start {} residual {}", r.start_id, r.stationarity_residual);
            for w in r.objective_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
            }
            prop_assert!(best.q_value <= r.final_q_obj + 1e-9 * best.q_value.abs().max(1.0));
        }
        // the baseline is one of the starts, so the best run cannot be worse
        prop_assert!(run.best().final_q_obj <= q0 + 1e-9 * q0.abs().max(1.0));
    }

    #[test]
    fn refinement_matches_exact_piece_solution((seed, n, k, bounded, mixed) in instance_args()) {
        let inst = random_instance(seed, n, k, bounded, mixed);
        let target = random_feasible(seed ^ 0xabc, &inst);
        let part = gpa::Partition::of(&inst, &target);
        let exact = oracle::solve_restricted(&inst, &part).unwrap();
        let l = model::gershgorin_l(&inst);
        let refined = gpa::refine_on_partition(&inst, &part, &target, l, 1e-12, 200_000).unwrap();
        prop_assert!(refined.converged);
        let q_ref = model::objective_q(&inst, &refined.p).unwrap();
        prop_assert!((q_ref - exact.q_value).abs() <= 1e-7 * exact.q_value.abs().max(1.0));
        for (a, b) in refined.p.iter().zip(&exact.p) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
    }
}

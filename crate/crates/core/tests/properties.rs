use icl_core::finite;
use icl_core::interval;
use icl_core::model::{self, make_uniform_grid, SignalDistribution};
use proptest::prelude::*;

fn interior() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.05f64..3.0, 0.2f64..4.0, 0.01f64..0.99).prop_map(|(b, v, u)| {
        let lo = interval::degeneracy_threshold(b, v);
        (b, lo + u * (b - lo), v)
    })
}

fn weighted(k: usize) -> impl Strategy<Value = SignalDistribution> {
    (prop::collection::vec(0.05f64..1.0, k), prop::collection::vec(0.1f64..1.0, k)).prop_map(|(w, gaps)| {
        let total: f64 = w.iter().sum();
        let f: Vec<f64> = w.iter().map(|x| x / total).collect();
        let mut t: Vec<f64> = gaps.iter().scan(0.0, |acc, g| {
            *acc += g;
            Some(*acc)
        }).collect();
        let mean: f64 = t.iter().zip(&f).map(|(a, p)| a * p).sum();
        t.iter_mut().for_each(|x| *x -= mean);
        SignalDistribution::new(t, f).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cutoffs_are_ordered_roots((b, r, v) in interior(), a in 0.01f64..0.99) {
        let alpha = a / b;
        let (lo, hi) = interval::cutoffs_from_alpha(alpha, b, r, v).unwrap();
        prop_assert!(lo <= hi);
        for w in [lo, hi] {
            let q = w + r + alpha * v - alpha * (w + b) * w;
            prop_assert!(q.abs() <= 1e-9 * (1.0 + w * w), "q({w}) = {q}");
        }
    }

    #[test]
    fn solved_interval_satisfies_the_envelope((b, r, v) in interior()) {
        let m = interval::solve_alpha(b, r, v).unwrap();
        prop_assert!(!m.degenerate);
        prop_assert!(interval::aggregate_icl_residual(m.alpha, b, r, v).unwrap().abs() <= 1e-12);
        let value = interval::receiver_value(&m, r);
        prop_assert!(value <= interval::receiver_first_best_value(r, v) + 1e-12);
    }

    #[test]
    fn nef_vectors_sum_to_zero(dist in weighted(4), counts in prop::collection::vec(0u32..6, 4)) {
        let n: u32 = counts.iter().sum();
        prop_assume!(n > 0);
        let h = model::nef(&counts, &dist, n).unwrap();
        prop_assert!(h.h.iter().sum::<f64>().abs() <= 1e-12);
        let direct: f64 = counts.iter().zip(&dist.t).map(|(&c, t)| c as f64 * t).sum::<f64>() / (n as f64).sqrt();
        prop_assert!((h.omega(&dist) - direct).abs() <= 1e-12);
    }

    #[test]
    fn profile_tables_are_complete(k in 2usize..5, n in 1u32..7) {
        let dist = make_uniform_grid(k, -1.0, 1.0).unwrap();
        let table = finite::enumerate_profiles(&dist, n, 10_000).unwrap();
        prop_assert_eq!(table.len() as u128, finite::profile_count(k, n));
        prop_assert!((table.prob.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for j in 0..table.len() {
            prop_assert_eq!(table.find(table.profile(j)), Some(j));
        }
    }

    #[test]
    fn sender_preferred_is_ic_for_any_weights(dist in weighted(3), b in 0.05f64..1.5, n in 1u32..6) {
        let table = finite::enumerate_profiles(&dist, n, 10_000).unwrap();
        let sp = finite::sender_preferred_table(&table, b);
        prop_assert!(finite::check_ic(&sp, &table, &dist, b).unwrap() <= 1e-12);
    }

    #[test]
    fn bound_matches_the_inverse_square_at_zero_threshold(b in 0.01f64..5.0) {
        let nl = model::n_lower_bound(b, 0.0, 0.0, 1.0).unwrap();
        prop_assert!((nl * b * b - 1.0).abs() <= 1e-12);
    }
}

use highs::{HighsModelStatus, RowProblem, Sense};
use icl_core::finite::{self, LpOptions};
use icl_core::model::{make_uniform_grid, Preferences, SignalDistribution};
use icl_core::Error;

/// Brute-force LP over ordered profiles, one IC constraint per sender and
/// deviation, both obedience constraints. No symmetry imposed.
fn ordered_lp(dist: &SignalDistribution, b: f64, r: f64, n: usize) -> f64 {
    let k = dist.k();
    let total = k.pow(n as u32);
    let decode = |mut idx: usize| {
        let mut v = vec![0usize; n];
        for slot in v.iter_mut() {
            *slot = idx % k;
            idx /= k;
        }
        v
    };
    let encode = |v: &[usize]| v.iter().rev().fold(0usize, |acc, &x| acc * k + x);
    let sq = (n as f64).sqrt();
    let mut prob = vec![0.0; total];
    let mut omega = vec![0.0; total];
    for idx in 0..total {
        let v = decode(idx);
        prob[idx] = v.iter().map(|&x| dist.f[x]).product();
        omega[idx] = v.iter().map(|&x| dist.t[x]).sum::<f64>() / sq;
    }
    let mut pb = RowProblem::default();
    let cols: Vec<_> = (0..total).map(|j| pb.add_column(prob[j] * (omega[j] + r), 0.0..=1.0)).collect();
    for i in 0..n {
        for tk in 0..k {
            for tl in 0..k {
                if tk == tl {
                    continue;
                }
                // sum over profiles with sender i of type tk
                let mut coeffs = std::collections::BTreeMap::new();
                for idx in 0..total {
                    let v = decode(idx);
                    if v[i] != tk {
                        continue;
                    }
                    let w = prob[idx] / dist.f[tk] * (omega[idx] + b);
                    let mut dv = v.clone();
                    dv[i] = tl;
                    *coeffs.entry(idx).or_insert(0.0) += w;
                    *coeffs.entry(encode(&dv)).or_insert(0.0) -= w;
                }
                let row: Vec<_> = coeffs.into_iter().map(|(j, c)| (cols[j], c)).collect();
                pb.add_row(0.0.., &row);
            }
        }
    }
    let obey: Vec<_> = (0..total).map(|j| (cols[j], prob[j] * (omega[j] + r))).collect();
    pb.add_row(0.0.., &obey);
    let const_term: f64 = (0..total).map(|j| prob[j] * (omega[j] + r)).sum();
    pb.add_row(const_term.., &obey);
    let mut model = pb.optimise(Sense::Maximise);
    model.make_quiet();
    model.set_option("primal_feasibility_tolerance", 1e-10);
    model.set_option("dual_feasibility_tolerance", 1e-10);
    let solved = model.solve();
    assert_eq!(solved.status(), HighsModelStatus::Optimal);
    let x = solved.get_solution().columns().to_vec();
    (0..total).map(|j| prob[j] * (omega[j] + r) * x[j]).sum()
}

#[test]
fn symmetric_lifted_lp_matches_ordered_oracle() {
    let cases = [(3usize, 2usize, 0.8, 0.0), (4, 2, 0.3, 0.0), (5, 2, 1.2, 0.2), (3, 3, 0.7, 0.0), (4, 3, 0.4, -0.1)];
    for (k, n, b, r) in cases {
        let dist = make_uniform_grid(k, -1.0, 1.0).unwrap();
        let sol = finite::solve_optimal(&dist, Preferences::new(b, r).unwrap(), n as u32, LpOptions::default()).unwrap();
        let oracle = ordered_lp(&dist, b, r, n);
        assert!(
            (sol.report.objective - oracle).abs() < 1e-8,
            "K={k} N={n} b={b} r={r}: lifted {} vs ordered {oracle}",
            sol.report.objective
        );
        assert!(sol.report.ic_gap <= 1e-8);
        assert_eq!(sol.report.obedient, (true, true));
    }
}

#[test]
fn literal_ic_agrees_with_interim_identity() {
    let dist = make_uniform_grid(5, -1.0, 1.0).unwrap();
    let table = finite::enumerate_profiles(&dist, 3, 10_000).unwrap();
    // an arbitrary non-IC mechanism
    let sigma: Vec<f64> = table.omega.iter().map(|w| 0.5 + 0.5 * (3.0 * w).sin()).collect();
    let b = 0.4;
    let (u, q) = finite::interim(&sigma, &table, &dist, b);
    let sq = 3f64.sqrt();
    let mut worst = 0.0f64;
    for k in 0..5 {
        for l in 0..5 {
            if k == l {
                continue;
            }
            let (lhs, rhs) = finite::ic_lhs_rhs(&sigma, &table, &dist, b, k, l).unwrap();
            assert!((lhs - u[k]).abs() < 1e-13);
            let identity = u[l] + (dist.t[k] - dist.t[l]) / sq * q[l];
            assert!((rhs - identity).abs() < 1e-13, "k={k} l={l}: {rhs} vs {identity}");
            worst = worst.max(rhs - lhs);
        }
    }
    assert!((finite::check_ic(&sigma, &table, &dist, b).unwrap() - worst).abs() < 1e-13);
    assert!(worst > 0.0);
}

#[test]
fn profile_table_basics() {
    assert_eq!(finite::profile_count(3, 4), 15);
    assert_eq!(finite::profile_count(41, 2), 861);
    assert_eq!(finite::profile_count(2, 10), 11);
    let dist = make_uniform_grid(4, -1.0, 1.0).unwrap();
    let table = finite::enumerate_profiles(&dist, 5, 1000).unwrap();
    assert_eq!(table.len() as u128, finite::profile_count(4, 5));
    let total: f64 = table.prob.iter().sum();
    assert!((total - 1.0).abs() < 1e-13);
    let mean: f64 = table.prob.iter().zip(&table.omega).map(|(p, w)| p * w).sum();
    let var: f64 = table.prob.iter().zip(&table.omega).map(|(p, w)| p * w * w).sum();
    assert!(mean.abs() < 1e-13);
    assert!((var - dist.variance).abs() < 1e-12);
    for j in 0..table.len() {
        assert_eq!(table.profile(j).iter().sum::<u32>(), 5);
        assert_eq!(table.find(table.profile(j)), Some(j));
    }
}

#[test]
fn profile_cap_is_enforced() {
    let dist = make_uniform_grid(41, -1.0, 1.0).unwrap();
    let err = finite::enumerate_profiles(&dist, 8, 1000).unwrap_err();
    assert!(matches!(err, Error::ProfileCapExceeded { .. }));
}

#[test]
fn sender_preferred_is_exactly_ic() {
    let dist = make_uniform_grid(7, -1.0, 1.0).unwrap();
    for n in [1u32, 2, 4] {
        let table = finite::enumerate_profiles(&dist, n, 10_000).unwrap();
        for b in [0.05, 0.5, 1.5] {
            let s = finite::sender_preferred_table(&table, b);
            assert!(finite::check_ic(&s, &table, &dist, b).unwrap() <= 1e-14);
        }
    }
}

#[test]
#[ignore = "fails on the K=41 midpoint grid: discrete types admit a gain of about 1.6e-4 over sender-preferred"]
fn small_bias_lp_equals_sender_preferred() {
    let dist = make_uniform_grid(41, -1.0, 1.0).unwrap();
    let prefs = Preferences::new(0.1, 0.0).unwrap();
    let sol = finite::solve_optimal(&dist, prefs, 2, LpOptions::default()).unwrap();
    let sp = finite::sender_preferred_table(&sol.table, 0.1);
    let (v, _) = finite::evaluate_mechanism(&sp, &sol.table, prefs).unwrap();
    assert!((sol.report.objective - v).abs() <= 1e-6 * v.abs());
}

#[test]
fn large_bias_lp_beats_sender_preferred_on_both_grids() {
    let mut gains = vec![];
    for k in [21usize, 41] {
        let dist = make_uniform_grid(k, -1.0, 1.0).unwrap();
        let prefs = Preferences::new(0.8, 0.0).unwrap();
        let sol = finite::solve_optimal(&dist, prefs, 2, LpOptions::default()).unwrap();
        let sp = finite::sender_preferred_table(&sol.table, 0.8);
        let (v, _) = finite::evaluate_mechanism(&sp, &sol.table, prefs).unwrap();
        gains.push(sol.report.objective - v);
    }
    assert!(gains.iter().all(|&g| g > 1e-4), "{gains:?}");
    // same order of magnitude on the coarse and fine grid
    assert!(gains[0] / gains[1] > 0.5 && gains[0] / gains[1] < 2.0, "{gains:?}");
}

#[test]
fn first_best_table_is_not_ic_with_large_bias() {
    let dist = make_uniform_grid(11, -1.0, 1.0).unwrap();
    let table = finite::enumerate_profiles(&dist, 2, 10_000).unwrap();
    let fb = finite::receiver_first_best_table(&table, 0.0);
    assert!(finite::check_ic(&fb, &table, &dist, 0.8).unwrap() > 1e-3);
}

#[test]
fn coarse_grids_leave_sender_preferred_optimal_at_small_bias() {
    for k in [3usize, 9, 11] {
        let dist = make_uniform_grid(k, -1.0, 1.0).unwrap();
        let prefs = Preferences::new(0.1, 0.0).unwrap();
        let sol = finite::solve_optimal(&dist, prefs, 2, LpOptions::default()).unwrap();
        let sp = finite::sender_preferred_table(&sol.table, 0.1);
        let (v, _) = finite::evaluate_mechanism(&sp, &sol.table, prefs).unwrap();
        assert!((sol.report.objective - v).abs() <= 1e-6 * v, "K={k}");
    }
}

#[test]
#[ignore = "grids 11, 21, 41 are not nested and the objective falls as K grows"]
fn objective_nondecreasing_under_refinement() {
    let prefs = Preferences::new(0.8, 0.0).unwrap();
    let values: Vec<f64> = [11usize, 21, 41]
        .iter()
        .map(|&k| {
            let dist = make_uniform_grid(k, -1.0, 1.0).unwrap();
            finite::solve_optimal(&dist, prefs, 2, LpOptions::default()).unwrap().report.objective
        })
        .collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{values:?}");
}

#[test]
fn constant_and_zero_mechanisms() {
    let dist = make_uniform_grid(5, -1.0, 1.0).unwrap();
    let table = finite::enumerate_profiles(&dist, 3, 10_000).unwrap();
    let prefs = Preferences::new(0.4, -0.1).unwrap();
    let ones = vec![1.0; table.len()];
    let (vr, vs) = finite::evaluate_mechanism(&ones, &table, prefs).unwrap();
    assert!((vr + 0.1).abs() < 1e-13 && (vs - 0.4).abs() < 1e-13);
    assert_eq!(finite::evaluate_mechanism(&vec![0.0; table.len()], &table, prefs).unwrap(), (0.0, 0.0));
    assert!(finite::check_ic(&ones, &table, &dist, 0.4).unwrap() <= 1e-14);
    for k in 0..5 {
        for l in 0..5 {
            if k != l {
                let (lhs, rhs) = finite::ic_lhs_rhs(&ones, &table, &dist, 0.4, k, l).unwrap();
                assert!((lhs - rhs).abs() < 1e-13);
                assert!((lhs - (dist.t[k] / 3f64.sqrt() + 0.4)).abs() < 1e-13);
            }
        }
    }
}

#[test]
fn near_zero_conflict_reaches_first_best() {
    let dist = make_uniform_grid(9, -1.0, 1.0).unwrap();
    let r = 0.3;
    let prefs = Preferences::new(r + 1e-9, r).unwrap();
    let sol = finite::solve_optimal(&dist, prefs, 2, LpOptions::default()).unwrap();
    let fb = finite::receiver_first_best_table(&sol.table, r);
    let (v, _) = finite::evaluate_mechanism(&fb, &sol.table, prefs).unwrap();
    assert!((sol.report.objective - v).abs() < 1e-8);
}

#[test]
fn single_sender_first_best_fails_ic_once_bias_exceeds_the_gap() {
    let dist = make_uniform_grid(2, -1.0, 1.0).unwrap();
    let table = finite::enumerate_profiles(&dist, 1, 10).unwrap();
    let fb = finite::receiver_first_best_table(&table, 0.0);
    assert_eq!(finite::check_ic(&fb, &table, &dist, 0.2).unwrap(), 0.0);
    assert!(finite::check_ic(&fb, &table, &dist, 0.8).unwrap() > 0.0);
    let sp = finite::sender_preferred_table(&table, 0.2);
    let (v, _) = finite::evaluate_mechanism(&sp, &table, Preferences::new(0.2, 0.0).unwrap()).unwrap();
    assert!((v - 0.25).abs() < 1e-15);
}

#[test]
fn large_grid_optimum_is_non_monotone_in_the_state() {
    let dist = make_uniform_grid(200, -1.0, 1.0).unwrap();
    let b = 0.6 * std::f64::consts::SQRT_2;
    let sol = finite::solve_optimal(&dist, Preferences::new(b, 0.0).unwrap(), 2, LpOptions::default()).unwrap();
    let sigma = &sol.mechanism.sigma;
    let w = &sol.table.omega;
    // some accepted state is followed by a state with strictly lower acceptance
    let mut order: Vec<usize> = (0..w.len()).filter(|&j| sigma[j] > 1e-6).collect();
    order.sort_by(|&a, &c| w[a].total_cmp(&w[c]));
    let mut best_below = f64::MIN;
    let mut found = false;
    for &j in &order {
        if sigma[j] < best_below - 1e-6 {
            found = true;
            break;
        }
        best_below = best_below.max(sigma[j]);
    }
    assert!(found);
    assert!(sol.report.ic_gap <= 1e-8);
}

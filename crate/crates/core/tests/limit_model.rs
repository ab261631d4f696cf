use icl_core::interval::{self, Regime};
use icl_core::model::{self, make_uniform_grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Composite Simpson on [a, b] with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

fn gauss(w: f64, v: f64) -> f64 {
    (-w * w / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
}

fn random_interior(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    let b = rng.random_range(0.05..3.0);
    let v = rng.random_range(0.2..4.0);
    let lo = interval::degeneracy_threshold(b, v);
    let r = rng.random_range(lo + 0.01 * (b - lo)..b - 0.01 * (b - lo));
    (b, r, v)
}

#[test]
fn bound_examples_and_identity() {
    assert_eq!(model::n_lower_bound(0.1, 0.0, 0.0, 1.0).unwrap(), 100.0);
    for b in [0.07, 0.3, 0.55, 1.3, 2.0] {
        let nl = model::n_lower_bound(b, 0.0, 0.0, 1.0).unwrap();
        assert!((nl - 1.0 / (b * b)).abs() <= 1e-12 * nl);
    }
}

#[test]
fn bound_is_the_crossing_of_the_bracket_inequality() {
    for (b, r, ell, s) in [(0.5, 0.1, 0.0, 1.0), (0.3, -0.05, -0.5, 0.8), (0.2, 0.1, 0.0, 1.0), (1.0, 0.4, -1.0, 2.0)] {
        let nl = model::n_lower_bound(b, r, ell, s).unwrap();
        let holds = |n: f64| r + n.sqrt() * s >= n * (b - r) * (1.0 - ell);
        let mut n = 1.0;
        while n < 4.0 * nl + 10.0 {
            if (n - nl).abs() > 1e-9 {
                assert_eq!(holds(n), n < nl, "b={b} r={r} N={n} bound={nl}");
            }
            n += 1.0;
        }
        let gap = r + nl.sqrt() * s - nl * (b - r) * (1.0 - ell);
        assert!(gap.abs() < 1e-10 * nl.max(1.0));
    }
}

#[test]
fn bound_rejects_bad_inputs() {
    assert!(model::n_lower_bound(0.1, 0.2, 0.0, 1.0).is_err());
    assert!(model::n_lower_bound(0.5, 0.1, 0.5, 1.0).is_err());
    // negative r large enough to make the square root imaginary
    assert!(model::n_lower_bound(0.1, -2.0, 0.0, 1.0).is_err());
}

#[test]
fn cheap_talk_cutoffs_are_indifferent() {
    for b in [0.05, 0.1, 0.2, 0.4] {
        let c = model::cheap_talk_cutoffs(b).unwrap();
        let u = |own: f64| move |s2: f64| 0.5 * ((own + s2) / std::f64::consts::SQRT_2 + b);
        let r1 = simpson(u(c.c1), c.c1, 1.0, 2000);
        let r2 = simpson(u(c.c2), -1.0, c.c2, 2000);
        assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12, "b={b}: {r1} {r2}");
        let (m1, m2) = model::cheap_talk_indifference(b, c);
        assert!(m1.abs() <= 1e-8 && m2.abs() <= 1e-8);
    }
    assert!(model::cheap_talk_cutoffs(0.75).is_err());
}

#[test]
fn nef_has_multinomial_covariance() {
    let dist = make_uniform_grid(4, -1.0, 1.0).unwrap();
    let n = 50u32;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let reps = 40_000;
    let k = dist.k();
    let mut cov = vec![0.0; k * k];
    let mut mean = vec![0.0; k];
    for _ in 0..reps {
        let mut counts = vec![0u32; k];
        for _ in 0..n {
            counts[rng.random_range(0..k)] += 1;
        }
        let h = model::nef(&counts, &dist, n).unwrap().h;
        for i in 0..k {
            mean[i] += h[i] / reps as f64;
            for j in 0..k {
                cov[i * k + j] += h[i] * h[j] / reps as f64;
            }
        }
    }
    let sigma = model::nef_covariance(&dist);
    for i in 0..k {
        assert!(mean[i].abs() < 0.01);
        for j in 0..k {
            assert!((cov[i * k + j] - sigma[(i, j)]).abs() < 0.01, "({i},{j})");
        }
    }
    assert!(model::nef(&[1, 2, 3, 4], &dist, 11).is_err());
}

#[test]
fn interval_solver_on_random_interior_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let (b, r, v) = random_interior(&mut rng);
        assert_eq!(interval::regime(b, r, v), Regime::Interior);
        let m = interval::solve_alpha(b, r, v).unwrap();
        assert!(!m.degenerate);
        assert!(m.alpha > 0.0 && m.alpha < 1.0 / b);
        assert!(interval::aggregate_icl_residual(m.alpha, b, r, v).unwrap().abs() <= 1e-12);
        // when the upper tail is negligible the root sits within rounding of -b
        let tail = (m.omega_hi + b) * (-m.omega_hi * m.omega_hi / (2.0 * v)).exp();
        assert!(-b < m.omega_lo || (m.omega_lo == -b && tail < 1e-30), "b={b} r={r} v={v}: {m:?}");
        assert!(m.omega_lo < -r && -r < m.omega_hi, "b={b} r={r} v={v}: {m:?}");
        assert!((m.omega_lo + m.omega_hi - (1.0 - m.alpha * b) / m.alpha).abs() <= 1e-10 * (1.0 / m.alpha).max(1.0));
        // closed form against an independent Simpson rule at a non-optimal alpha too
        for a in [m.alpha, 0.5 * m.alpha] {
            let (lo, hi) = interval::cutoffs_from_alpha(a, b, r, v).unwrap();
            let direct = simpson(|w| (1.0 - w * (w + b) / v) * gauss(w, v), lo, hi, 4000)
                * (2.0 * std::f64::consts::PI * v).sqrt();
            let closed = interval::aggregate_icl_residual(a, b, r, v).unwrap();
            assert!((closed - direct).abs() < 1e-8, "closed {closed} direct {direct}");
            assert!((interval::aggregate_icl_residual_quadrature(lo, hi, b, v) - closed).abs() < 1e-8);
        }
    }
}

#[test]
fn degenerate_exactly_below_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let b = rng.random_range(0.05..3.0);
        let v = rng.random_range(0.2..4.0);
        let t = interval::degeneracy_threshold(b, v);
        assert_eq!(interval::regime(b, t, v), Regime::Degenerate);
        assert_eq!(interval::regime(b, t - 0.1, v), Regime::Degenerate);
        assert!(interval::solve_alpha(b, t - 0.1, v).unwrap().degenerate);
        let above = t + 1e-3 * (b - t);
        assert!(!interval::solve_alpha(b, above, v).unwrap().degenerate);
    }
}

#[test]
fn values_match_direct_integration() {
    let (b, r, v) = (1.0, 0.0, 1.0);
    let m = interval::solve_alpha(b, r, v).unwrap();
    let vr = simpson(|w| (w + r) * gauss(w, v), m.omega_lo, m.omega_hi, 4000);
    let vs = simpson(|w| (w + b) * gauss(w, v), m.omega_lo, m.omega_hi, 4000);
    assert!((interval::receiver_value(&m, r) - vr).abs() < 1e-12);
    assert!((interval::sender_value(&m, b) - vs).abs() < 1e-12);
    let fb = simpson(|w| (w + r) * gauss(w, v), -r, 12.0, 20000);
    assert!((interval::receiver_first_best_value(r, v) - fb).abs() < 1e-10);
    // the constrained optimum sits between no-information and first best
    assert!(interval::receiver_value(&m, r) > 0.0);
    assert!(interval::receiver_value(&m, r) < interval::receiver_first_best_value(r, v));
}

#[test]
fn icl_certificate_on_a_type_grid() {
    let dist = make_uniform_grid(11, -1.0, 1.0).unwrap();
    let m = interval::solve_alpha(0.6, 0.0, dist.variance).unwrap();
    let cert = interval::icl_certificate(&m, &dist, 0.6).unwrap();
    assert!(cert.monotone);
    let ratios: Vec<f64> =
        cert.residuals.iter().zip(&dist.t).filter(|(_, t)| t.abs() > 1e-12).map(|(r, t)| r / t).collect();
    assert!(cert.residuals.iter().all(|r| r.abs() <= 1e-6));
    let spread = ratios.iter().cloned().fold(f64::MIN, f64::max) - ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread <= 1e-8);
    // a non-optimal interval violates the envelope condition
    let bad = interval::IntervalMechanism::from_cutoffs(-0.6, 2.0, dist.variance);
    let c = interval::icl_certificate(&bad, &dist, 0.6).unwrap();
    assert!(c.residuals.iter().any(|r| r.abs() > 1e-3));
    let wrong_v = interval::solve_alpha(0.6, 0.0, 1.0).unwrap();
    assert!(interval::icl_certificate(&wrong_v, &dist, 0.6).is_err());
}

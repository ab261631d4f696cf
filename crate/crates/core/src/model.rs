//! Signal distributions, preferences, normalized empirical frequencies and
//! the small-economy bound.

use crate::error::{invalid, Error, Result};
use crate::numerics::quad::{integrate, QuadOptions};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalDistribution {
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    pub variance: f64,
    pub support_bounds: (f64, f64),
}

impl SignalDistribution {
    /// Validate and build from types and probabilities; support defaults to `(t_1, t_K)`.
    pub fn new(t: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        let bounds = (*t.first().unwrap_or(&0.0), *t.last().unwrap_or(&0.0));
        Self::with_support(t, f, bounds)
    }

    pub fn with_support(t: Vec<f64>, f: Vec<f64>, support_bounds: (f64, f64)) -> Result<Self> {
        if t.len() != f.len() || t.is_empty() {
            return invalid("t and f must be non-empty and of equal length");
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("types must be strictly increasing");
        }
        if f.iter().any(|&p| !(p > 0.0)) {
            return invalid("every probability must be positive");
        }
        let total: f64 = f.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return invalid(format!("probabilities sum to {total}"));
        }
        let mean: f64 = t.iter().zip(&f).map(|(a, p)| a * p).sum();
        if mean.abs() > PROB_TOL {
            return invalid(format!("mean is {mean}; distributions must be centred"));
        }
        let variance = t.iter().zip(&f).map(|(a, p)| p * a * a).sum();
        Ok(Self { t, f, variance, support_bounds })
    }

    pub fn k(&self) -> usize {
        self.t.len()
    }
}

/// Midpoints of `k` equal cells of `[lo, hi]`, each with mass `1/k`, shifted to mean zero.
pub fn make_uniform_grid(k: usize, lo: f64, hi: f64) -> Result<SignalDistribution> {
    if k < 2 {
        return invalid("grid needs K >= 2");
    }
    if !(lo < hi) {
        return invalid("grid needs lo < hi");
    }
    let w = (hi - lo) / k as f64;
    let mut t: Vec<f64> = (0..k).map(|i| lo + (i as f64 + 0.5) * w).collect();
    let mean = t.iter().sum::<f64>() / k as f64;
    for x in t.iter_mut() {
        *x -= mean;
    }
    // Symmetric grids: make mirrored points exact negatives of each other.
    if (lo + hi).abs() <= f64::EPSILON * (hi - lo) {
        for i in 0..k / 2 {
            let v = 0.5 * (t[k - 1 - i] - t[i]);
            t[i] = -v;
            t[k - 1 - i] = v;
        }
        if k % 2 == 1 {
            t[k / 2] = 0.0;
        }
    }
    let f = vec![1.0 / k as f64; k];
    let variance = t.iter().map(|a| a * a).sum::<f64>() / k as f64;
    Ok(SignalDistribution { t, f, variance, support_bounds: (lo - mean, hi - mean) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preferences {
    pub b: f64,
    pub r: f64,
}

impl Preferences {
    pub fn new(b: f64, r: f64) -> Result<Self> {
        if !(b > 0.0) {
            return invalid("sender bias must satisfy b > 0");
        }
        if !(r < b) {
            return invalid("receiver parameter must satisfy r < b");
        }
        Ok(Self { b, r })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NefVector {
    pub h: Vec<f64>,
}

impl NefVector {
    pub fn omega(&self, dist: &SignalDistribution) -> f64 {
        self.h.iter().zip(&dist.t).map(|(h, t)| h * t).sum()
    }
}

/// `h_k = sqrt(N) (n_k / N - f_k)`.
pub fn nef(counts: &[u32], dist: &SignalDistribution, n: u32) -> Result<NefVector> {
    if counts.len() != dist.k() {
        return invalid("count vector length differs from K");
    }
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    if total != n as u64 || n == 0 {
        return Err(Error::CountMismatch { got: total, expected: n as u64 });
    }
    let nf = n as f64;
    let sq = nf.sqrt();
    let h = counts.iter().zip(&dist.f).map(|(&c, &p)| sq * (c as f64 / nf - p)).collect();
    Ok(NefVector { h })
}

/// Limit covariance `f_k (1[k=l] - f_l)`.
pub fn nef_covariance(dist: &SignalDistribution) -> DMatrix<f64> {
    let k = dist.k();
    DMatrix::from_fn(k, k, |i, j| dist.f[i] * (if i == j { 1.0 } else { 0.0 } - dist.f[j]))
}

pub fn sender_preferred(omega: f64, b: f64) -> bool {
    omega + b >= 0.0
}

pub fn receiver_first_best(omega: f64, r: f64) -> bool {
    omega + r >= 0.0
}

/// Sufficient sender count below which the sender-preferred mechanism is optimal.
pub fn n_lower_bound(b: f64, r: f64, ell: f64, s_bar: f64) -> Result<f64> {
    if !(b > r) {
        return invalid("bound requires b > r");
    }
    if !(ell <= 0.0) || !ell.is_finite() {
        return invalid("bound requires a finite ell <= 0");
    }
    if !(s_bar > 0.0) {
        return invalid("bound requires s_bar > 0");
    }
    let scale = (b - r) * (1.0 - ell);
    let disc = s_bar * s_bar + 4.0 * r * scale;
    if disc < 0.0 {
        return Err(Error::BoundUndefined(disc));
    }
    let x = (disc.sqrt() + s_bar) / (2.0 * scale);
    Ok(x * x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheapTalkCutoffs {
    pub c1: f64,
    pub c2: f64,
}

/// Cutoffs of the two-sender, uniform-signal monotone partition equilibrium.
pub fn cheap_talk_cutoffs(b: f64) -> Result<CheapTalkCutoffs> {
    let k = 2.0 * std::f64::consts::SQRT_2 * b;
    let c1 = -(1.0 + k) / 3.0;
    let c2 = (1.0 - k) / 3.0;
    let inside = |c: f64| c > -1.0 && c < 1.0;
    if !inside(c1) || !inside(c2) {
        return Err(Error::CutoffOutOfSupport { c1, c2 });
    }
    Ok(CheapTalkCutoffs { c1, c2 })
}

/// Indifference residuals of the cutoff types, by numerical integration over the
/// other sender's uniform signal on `[-1, 1]`. Pivotal events: for `c1` the other
/// sender's signal is above `c1`; for `c2` it is below `c2`.
pub fn cheap_talk_indifference(b: f64, cuts: CheapTalkCutoffs) -> (f64, f64) {
    let payoff = |own: f64| move |s2: f64| 0.5 * ((own + s2) / std::f64::consts::SQRT_2 + b);
    let opts = QuadOptions::default();
    let r1 = integrate(payoff(cuts.c1), cuts.c1, 1.0, opts).value[0];
    let r2 = integrate(payoff(cuts.c2), -1.0, cuts.c2, opts).value[0];
    (r1, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_examples() {
        let g = make_uniform_grid(2, -1.0, 1.0).unwrap();
        assert_eq!(g.t, vec![-0.5, 0.5]);
        assert_eq!(g.variance, 0.25);
        let g3 = make_uniform_grid(3, -1.0, 1.0).unwrap();
        assert!((g3.t[0] + 2.0 / 3.0).abs() < 1e-15 && g3.t[1] == 0.0);
        let g200 = make_uniform_grid(200, -1.0, 1.0).unwrap();
        assert!((g200.variance - 1.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(make_uniform_grid(1, -1.0, 1.0).is_err());
        assert!(make_uniform_grid(4, 1.0, 1.0).is_err());
    }

    #[test]
    fn asymmetric_grid_is_recentred() {
        let g = make_uniform_grid(7, 0.0, 3.0).unwrap();
        let mean: f64 = g.t.iter().zip(&g.f).map(|(a, p)| a * p).sum();
        assert!(mean.abs() < 1e-15);
        assert!(SignalDistribution::new(g.t.clone(), g.f.clone()).is_ok());
    }

    #[test]
    fn nef_examples() {
        let d = make_uniform_grid(2, -1.0, 1.0).unwrap();
        assert_eq!(nef(&[2, 2], &d, 4).unwrap().h, vec![0.0, 0.0]);
        assert_eq!(nef(&[3, 1], &d, 4).unwrap().h, vec![0.5, -0.5]);
        assert_eq!(nef(&[0, 4], &d, 4).unwrap().h, vec![-1.0, 1.0]);
        assert!(matches!(nef(&[1, 1], &d, 4), Err(Error::CountMismatch { .. })));
    }

    #[test]
    fn covariance_examples() {
        let d = make_uniform_grid(2, -1.0, 1.0).unwrap();
        let c = nef_covariance(&d);
        assert_eq!(c[(0, 0)], 0.25);
        assert_eq!(c[(0, 1)], -0.25);
        let d3 = make_uniform_grid(3, -1.0, 1.0).unwrap();
        let c3 = nef_covariance(&d3);
        assert!((c3[(1, 1)] - 2.0 / 9.0).abs() < 1e-15 && (c3[(0, 2)] + 1.0 / 9.0).abs() < 1e-15);
        for i in 0..3 {
            assert!(c3.row(i).sum().abs() < 1e-15);
        }
    }

    #[test]
    fn baseline_mechanisms_ties_accept() {
        assert!(sender_preferred(-0.3, 0.3));
        assert!(!sender_preferred(-0.3 - 1e-12, 0.3));
        assert!(receiver_first_best(0.0, 0.0));
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(n_lower_bound(0.1, 0.0, 0.0, 1.0).unwrap(), 100.0);
        assert!(n_lower_bound(0.1, 0.1, 0.0, 1.0).is_err());
        assert!(matches!(n_lower_bound(1.0, -2.0, 0.0, 1.0), Err(Error::BoundUndefined(_))));
        let near = n_lower_bound(0.5 + 1e-6, 0.5, 0.0, 1.0).unwrap();
        assert!(near > 1e11);
    }

    #[test]
    fn cheap_talk_examples() {
        let c = cheap_talk_cutoffs(0.0).unwrap();
        assert!((c.c1 + 1.0 / 3.0).abs() < 1e-16 && (c.c2 - 1.0 / 3.0).abs() < 1e-16);
        assert!(matches!(cheap_talk_cutoffs(2.0), Err(Error::CutoffOutOfSupport { .. })));
    }
}

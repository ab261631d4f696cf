//! Large-economy optimum: accept exactly when the state lies in `[omega_lo, omega_hi]`.
//!
//! The cutoffs are the roots of `omega + r + alpha V - alpha (omega + b) omega = 0`;
//! `alpha` is pinned by the aggregate envelope condition `E[sigma ((omega + b) omega - V)] = 0`.

use crate::error::{invalid, Error, Result};
use crate::model::SignalDistribution;
use crate::numerics::normal;
use crate::numerics::quad::{integrate_pieces, QuadOptions};
use crate::numerics::roots::brent;
use serde::{Deserialize, Serialize};

const ALPHA_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Interior,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalMechanism {
    pub alpha: f64,
    pub omega_lo: f64,
    pub omega_hi: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub degenerate: bool,
}

impl IntervalMechanism {
    pub fn accept(&self, omega: f64) -> bool {
        !self.degenerate && omega >= self.omega_lo && omega <= self.omega_hi
    }

    /// An arbitrary interval on a state with variance `v`, for certificates and oracles.
    pub fn from_cutoffs(omega_lo: f64, omega_hi: f64, v: f64) -> Self {
        Self { alpha: f64::NAN, omega_lo, omega_hi, v, degenerate: false }
    }
}

pub fn degeneracy_threshold(b: f64, v: f64) -> f64 {
    (b - (b * b + 4.0 * v).sqrt()) / 2.0
}

pub fn regime(b: f64, r: f64, v: f64) -> Regime {
    if r > degeneracy_threshold(b, v) {
        Regime::Interior
    } else {
        Regime::Degenerate
    }
}

pub fn discriminant(alpha: f64, b: f64, r: f64, v: f64) -> f64 {
    let p = 1.0 - b * alpha;
    p * p + 4.0 * r * alpha + 4.0 * alpha * alpha * v
}

/// Roots `(omega_lo, omega_hi)` of the cutoff quadratic, computed without cancellation.
pub fn cutoffs_from_alpha(alpha: f64, b: f64, r: f64, v: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0) {
        return invalid("alpha must be positive");
    }
    let disc = discriminant(alpha, b, r, v);
    if disc < 0.0 {
        return Err(Error::NoRealCutoffs(disc));
    }
    let p = 1.0 - alpha * b;
    let sq = disc.sqrt();
    let c = -(r + alpha * v);
    if p >= 0.0 {
        let q = 0.5 * (p + sq);
        if q == 0.0 {
            return Ok((0.0, 0.0));
        }
        Ok((c / q, q / alpha))
    } else {
        let q = 0.5 * (p - sq);
        Ok((q / alpha, c / q))
    }
}

/// Aggregate envelope residual, up to the positive factor `1 / sqrt(2 pi V)`.
pub fn aggregate_icl_residual(alpha: f64, b: f64, r: f64, v: f64) -> Result<f64> {
    let (lo, hi) = cutoffs_from_alpha(alpha, b, r, v)?;
    Ok(edge(hi, b, v) - edge(lo, b, v))
}

fn edge(w: f64, b: f64, v: f64) -> f64 {
    if w.is_infinite() {
        return 0.0;
    }
    (w + b) * (-w * w / (2.0 * v)).exp()
}

/// The same residual by direct quadrature of `(1 - omega (omega + b) / V)` against
/// the state density over the accept interval, rescaled to match `aggregate_icl_residual`.
pub fn aggregate_icl_residual_quadrature(lo: f64, hi: f64, b: f64, v: f64) -> f64 {
    let s = v.sqrt();
    let (a, z) = (lo.max(-12.0 * s), hi.min(12.0 * s));
    if z <= a {
        return 0.0;
    }
    let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-14, max_intervals: 2000 };
    let res = integrate_pieces(
        |w, out| out[0] = (1.0 - w * (w + b) / v) * normal::density(w, v),
        &[a, z],
        1,
        opts,
    );
    res.value[0] * (2.0 * std::f64::consts::PI * v).sqrt()
}

pub fn solve_alpha(b: f64, r: f64, v: f64) -> Result<IntervalMechanism> {
    if !(b > 0.0) || !(r < b) {
        return invalid("interval solve needs b > 0 and r < b");
    }
    if !(v > 0.0) {
        return invalid("interval solve needs V > 0");
    }
    if regime(b, r, v) == Regime::Degenerate {
        return Ok(IntervalMechanism { alpha: 0.0, omega_lo: 0.0, omega_hi: 0.0, v, degenerate: true });
    }
    let f = |a: f64| aggregate_icl_residual(a, b, r, v).unwrap_or(f64::NAN);
    let root = brent(f, ALPHA_EPS, 1.0 / b - ALPHA_EPS, 1e-15, 500)?;
    let (omega_lo, omega_hi) = cutoffs_from_alpha(root.x, b, r, v)?;
    Ok(IntervalMechanism { alpha: root.x, omega_lo, omega_hi, v, degenerate: false })
}

fn shifted_value(mech: &IntervalMechanism, shift: f64) -> f64 {
    if mech.degenerate || mech.omega_hi <= mech.omega_lo {
        return 0.0;
    }
    let s = mech.v.sqrt();
    let (a, z) = (mech.omega_lo / s, mech.omega_hi / s);
    shift * normal::mass(a, z) + s * (normal::pdf(a) - normal::pdf(z))
}

/// `E[(omega + r) 1{omega_lo <= omega <= omega_hi}]` for `omega ~ N(0, V)`.
pub fn receiver_value(mech: &IntervalMechanism, r: f64) -> f64 {
    shifted_value(mech, r)
}

pub fn sender_value(mech: &IntervalMechanism, b: f64) -> f64 {
    shifted_value(mech, b)
}

/// `E[(omega + r)^+]`.
pub fn receiver_first_best_value(r: f64, v: f64) -> f64 {
    let s = v.sqrt();
    r * normal::cdf(r / s) + s * normal::pdf(r / s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IclCertificate {
    pub residuals: Vec<f64>,
    pub monotone: bool,
    pub e_sigma: f64,
    pub e_sigma_omega: f64,
}

/// Envelope residuals `E[sigma (omega + b) h_k / f_k] - E[sigma] t_k` and interim
/// monotonicity on a type grid, using `E[h_k | omega] = f_k t_k omega / V`.
pub fn icl_certificate(mech: &IntervalMechanism, dist: &SignalDistribution, b: f64) -> Result<IclCertificate> {
    if (dist.variance - mech.v).abs() > 1e-9 {
        return Err(Error::VarianceMismatch { dist: dist.variance, mech: mech.v });
    }
    let v = mech.v;
    let mut mom = [0.0; 3];
    if !mech.degenerate {
        let s = v.sqrt();
        let (a, z) = (mech.omega_lo.max(-12.0 * s), mech.omega_hi.min(12.0 * s));
        if z > a {
            let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-14, max_intervals: 2000 };
            let res = integrate_pieces(
                |w, out| {
                    let d = normal::density(w, v);
                    out[0] = d;
                    out[1] = w * d;
                    out[2] = (w + b) * w * d;
                },
                &[a, z],
                3,
                opts,
            );
            mom.copy_from_slice(&res.value);
        }
    }
    let residuals = dist.t.iter().map(|&t| t * (mom[2] / v - mom[0])).collect();
    Ok(IclCertificate { residuals, monotone: mom[1] >= 0.0, e_sigma: mom[0], e_sigma_omega: mom[1] })
}

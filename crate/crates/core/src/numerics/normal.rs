//! Standard normal density, distribution and truncated moments.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - cdf(x)` without cancellation.
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `P(a <= Z <= b)`, evaluated on whichever tail keeps precision.
pub fn mass(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if a > 0.0 {
        sf(a) - sf(b)
    } else {
        cdf(b) - cdf(a)
    }
}

/// Zeroth, first and second moments of a standard normal restricted to `[a, b]`
/// (unnormalized: `E[Z^j; a <= Z <= b]`). Infinite endpoints are allowed.
pub fn truncated_moments(a: f64, b: f64) -> [f64; 3] {
    if b <= a {
        return [0.0; 3];
    }
    let (pa, pb) = (pdf(a), pdf(b));
    let m0 = mass(a, b);
    let m1 = pa - pb;
    let xa = if a.is_finite() { a * pa } else { 0.0 };
    let xb = if b.is_finite() { b * pb } else { 0.0 };
    [m0, m1, m0 + xa - xb]
}

pub fn density(x: f64, var: f64) -> f64 {
    (-0.5 * x * x / var).exp() / (2.0 * PI * var).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert!((cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-15);
        assert!((sf(8.0) - 6.220_960_574_271_785e-16).abs() < 1e-28);
    }

    #[test]
    fn full_line_moments() {
        let m = truncated_moments(f64::NEG_INFINITY, f64::INFINITY);
        assert!((m[0] - 1.0).abs() < 1e-15);
        assert!(m[1].abs() < 1e-15);
        assert!((m[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_line_moments() {
        let m = truncated_moments(0.0, f64::INFINITY);
        assert!((m[0] - 0.5).abs() < 1e-15);
        assert!((m[1] - INV_SQRT_2PI).abs() < 1e-15);
        assert!((m[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn far_tail_mass_keeps_precision() {
        let m = mass(9.0, 10.0);
        let exact = sf(9.0) - sf(10.0);
        assert!(m > 0.0 && (m - exact).abs() / exact < 1e-12);
    }
}

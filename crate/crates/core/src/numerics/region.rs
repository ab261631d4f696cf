//! Gaussian moments over quadric regions.
//!
//! For independent `x_j ~ N(0, var_j)` and a region `{x : x'Ax + c.x + d >= 0}`
//! this computes `E[1{region}]`, `E[1{region} x]` and `E[1{region} x x']`.
//! The last coordinate is integrated in closed form (the region restricted
//! to one line is a union of at most two intervals); the remaining ones use
//! adaptive Kronrod quadrature, split where the inner interval structure changes.

use crate::error::{Error, Result};
use crate::numerics::normal;
use crate::numerics::quad::{integrate_pieces, QuadOptions};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Truncation of outer coordinates in standard-deviation units.
const OUTER_RANGE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Quadric {
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
    pub d: f64,
}

impl Quadric {
    pub fn new(a: DMatrix<f64>, c: DVector<f64>, d: f64) -> Self {
        let sym = (&a + a.transpose()) * 0.5;
        Self { a: sym, c, d }
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let m = self.dim();
        let mut g = self.d;
        for i in 0..m {
            g += self.c[i] * x[i];
            for j in 0..m {
                g += self.a[(i, j)] * x[i] * x[j];
            }
        }
        g
    }
}

/// How the outer coordinates are integrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expectation {
    /// Nested adaptive quadrature; supports up to three coordinates.
    Quadrature,
    /// Outer coordinates sampled, innermost still exact. Smooth in the
    /// quadric's coefficients for a fixed seed.
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub p: f64,
    pub m1: DVector<f64>,
    pub m2: DMatrix<f64>,
}

impl Moments {
    /// `E[1{region} (x'Bx + e.x + k)]`.
    pub fn quadratic_form(&self, b: &DMatrix<f64>, e: &DVector<f64>, k: f64) -> f64 {
        (b.component_mul(&self.m2)).sum() + e.dot(&self.m1) + k * self.p
    }
}

/// Region restricted to the innermost standard coordinate `y`:
/// `a y^2 + beta y + gamma >= 0`. Returns closed intervals (possibly infinite).
pub fn line_intervals(a: f64, beta: f64, gamma: f64) -> Vec<(f64, f64)> {
    let inf = f64::INFINITY;
    if a == 0.0 {
        if beta > 0.0 {
            return vec![(-gamma / beta, inf)];
        }
        if beta < 0.0 {
            return vec![(-inf, -gamma / beta)];
        }
        return if gamma >= 0.0 { vec![(-inf, inf)] } else { vec![] };
    }
    let disc = beta * beta - 4.0 * a * gamma;
    if disc < 0.0 {
        return if a > 0.0 { vec![(-inf, inf)] } else { vec![] };
    }
    let sq = disc.sqrt();
    let q = -0.5 * (beta + if beta >= 0.0 { sq } else { -sq });
    let (mut r1, mut r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, gamma / q) };
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    if a > 0.0 {
        vec![(-inf, r1), (r2, inf)]
    } else {
        vec![(r1, r2)]
    }
}

struct Standardized {
    m: usize,
    a: DMatrix<f64>,
    c: DVector<f64>,
    d: f64,
}

impl Standardized {
    fn new(q: &Quadric, sd: &[f64]) -> Self {
        let m = q.dim();
        let mut a = q.a.clone();
        let mut c = q.c.clone();
        for i in 0..m {
            c[i] *= sd[i];
            for j in 0..m {
                a[(i, j)] *= sd[i] * sd[j];
            }
        }
        Self { m, a, c, d: q.d }
    }

    /// Coefficients of the innermost line given the first `m-1` coordinates.
    fn line(&self, outer: &[f64]) -> (f64, f64, f64) {
        let last = self.m - 1;
        let a = self.a[(last, last)];
        let mut beta = self.c[last];
        let mut gamma = self.d;
        for i in 0..last {
            beta += 2.0 * self.a[(last, i)] * outer[i];
            gamma += self.c[i] * outer[i];
            for j in 0..last {
                gamma += self.a[(i, j)] * outer[i] * outer[j];
            }
        }
        (a, beta, gamma)
    }

    fn len(&self) -> usize {
        1 + self.m + self.m * (self.m + 1) / 2
    }

    /// Exact innermost integral, laid out as `[p, m1.., upper-triangular m2..]`.
    fn inner(&self, outer: &[f64], out: &mut [f64]) {
        let (a, beta, gamma) = self.line(outer);
        let mut mom = [0.0; 3];
        for (lo, hi) in line_intervals(a, beta, gamma) {
            let t = normal::truncated_moments(lo, hi);
            for k in 0..3 {
                mom[k] += t[k];
            }
        }
        let m = self.m;
        let coord = |i: usize, power: usize| -> f64 {
            // E[z_i^? * y^power] pieces for the layout below.
            if i == m - 1 {
                mom[power + 1]
            } else {
                outer[i] * mom[power]
            }
        };
        out[0] = mom[0];
        for i in 0..m {
            out[1 + i] = coord(i, 0);
        }
        let mut idx = 1 + m;
        for i in 0..m {
            for j in i..m {
                out[idx] = match (i == m - 1, j == m - 1) {
                    (true, true) => mom[2],
                    (false, true) => outer[i] * mom[1],
                    _ => outer[i] * outer[j] * mom[0],
                };
                idx += 1;
            }
        }
    }

    /// Kinks in the last outer coordinate, where the line solution set changes shape.
    fn breakpoints(&self, prefix: &[f64]) -> Vec<f64> {
        let mut pts = vec![-OUTER_RANGE, OUTER_RANGE];
        let eval = |z: f64| {
            let mut o = prefix.to_vec();
            o.push(z);
            self.line(&o)
        };
        let (a, b0, g0) = eval(0.0);
        let (_, bp, gp) = eval(1.0);
        let (_, bm, gm) = eval(-1.0);
        let b1 = 0.5 * (bp - bm);
        let (g1, g2) = (0.5 * (gp - gm), 0.5 * (gp + gm) - g0);
        let roots: Vec<f64> = if a == 0.0 {
            if b1 != 0.0 { vec![-b0 / b1] } else { vec![] }
        } else {
            let d2 = b1 * b1 - 4.0 * a * g2;
            let d1 = 2.0 * b0 * b1 - 4.0 * a * g1;
            let d0 = b0 * b0 - 4.0 * a * g0;
            quadratic_roots(d2, d1, d0)
        };
        pts.extend(roots.into_iter().filter(|r| r.abs() < OUTER_RANGE));
        pts.sort_by(f64::total_cmp);
        pts
    }

    fn integrate_level(&self, prefix: &mut Vec<f64>, out: &mut [f64], opts: QuadOptions) {
        if prefix.len() == self.m - 1 {
            self.inner(prefix, out);
            return;
        }
        let pts = if prefix.len() == self.m - 2 {
            self.breakpoints(prefix)
        } else {
            vec![-OUTER_RANGE, 0.0, OUTER_RANGE]
        };
        let n = self.len();
        let res = integrate_pieces(
            |z, buf| {
                let mut p = prefix.clone();
                p.push(z);
                self.integrate_level(&mut p, buf, opts);
                let w = normal::pdf(z);
                for v in buf.iter_mut() {
                    *v *= w;
                }
            },
            &pts,
            n,
            opts,
        );
        out.copy_from_slice(&res.value);
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return vec![];
    }
    if a.abs() <= 1e-14 * scale {
        return if b != 0.0 { vec![-c / b] } else { vec![] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

fn unpack(flat: &[f64], m: usize, sd: &[f64]) -> Moments {
    let p = flat[0];
    let m1 = DVector::from_fn(m, |i, _| flat[1 + i] * sd[i]);
    let mut m2 = DMatrix::zeros(m, m);
    let mut idx = 1 + m;
    for i in 0..m {
        for j in i..m {
            let v = flat[idx] * sd[i] * sd[j];
            m2[(i, j)] = v;
            m2[(j, i)] = v;
            idx += 1;
        }
    }
    Moments { p, m1, m2 }
}

/// Moments of the region under independent centred normals with standard deviations `sd`.
pub fn region_moments(q: &Quadric, sd: &[f64], mode: Expectation) -> Result<Moments> {
    let m = q.dim();
    if m == 0 || sd.len() != m || q.a.nrows() != m || q.a.ncols() != m {
        return Err(Error::InvalidInput("quadric and variance dimensions disagree".into()));
    }
    let st = Standardized::new(q, sd);
    let mut flat = vec![0.0; st.len()];
    match mode {
        Expectation::Quadrature => {
            if m > 3 {
                return Err(Error::QuadratureDimension(m));
            }
            let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-11, max_intervals: 2000 };
            st.integrate_level(&mut Vec::with_capacity(m), &mut flat, opts);
        }
        Expectation::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidInput("Monte Carlo mode needs samples > 0".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut buf = vec![0.0; st.len()];
            let mut outer = vec![0.0; m - 1];
            for _ in 0..samples {
                for z in outer.iter_mut() {
                    *z = StandardNormal.sample(&mut rng);
                }
                st.inner(&outer, &mut buf);
                for (f, b) in flat.iter_mut().zip(&buf) {
                    *f += b;
                }
            }
            for f in flat.iter_mut() {
                *f /= samples as f64;
            }
        }
    }
    Ok(unpack(&flat, m, sd))
}

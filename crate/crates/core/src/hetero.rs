//! Observable heterogeneous biases: the optimum accepts on a quadric in the class means.
//!
//! Class means `omega_m ~ N(0, eta)` are independent and `omega = sum_m sqrt(nu_m) omega_m`.
//! Accept iff `omega + r + sum_m lambda_m (omega omega_m + b_m omega_m - eta) + sum_m zeta_m omega_m >= 0`.

use crate::error::{invalid, Error, Result};
use crate::grid::{fill, linspace, RegionGrid};
use crate::numerics::newton::{self, NewtonOptions};
use crate::numerics::region::{region_moments, Expectation, Moments, Quadric};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasClassSpec {
    pub b: Vec<f64>,
    pub nu: Vec<f64>,
    pub eta: f64,
    pub r: f64,
}

impl BiasClassSpec {
    pub fn new(b: Vec<f64>, nu: Vec<f64>, eta: f64, r: f64) -> Result<Self> {
        if b.is_empty() || b.len() != nu.len() {
            return invalid("b and nu must be non-empty and of equal length");
        }
        if nu.iter().any(|&v| !(v > 0.0)) || (nu.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return invalid("class shares must be positive and sum to one");
        }
        if !(eta > 0.0) {
            return invalid("eta must be positive");
        }
        if b.iter().any(|&bm| !(bm > r)) {
            return invalid("every class bias must exceed r");
        }
        Ok(Self { b, nu, eta, r })
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticMechanism {
    pub lambda: Vec<f64>,
    pub zeta: Vec<f64>,
    pub spec: BiasClassSpec,
}

impl QuadraticMechanism {
    pub fn new(lambda: Vec<f64>, zeta: Vec<f64>, spec: BiasClassSpec) -> Result<Self> {
        if lambda.len() != spec.m() || zeta.len() != spec.m() {
            return invalid("lambda and zeta need one entry per class");
        }
        if zeta.iter().any(|&z| z < 0.0) {
            return invalid("zeta must be nonnegative");
        }
        Ok(Self { lambda, zeta, spec })
    }

    pub fn quadric(&self) -> Quadric {
        let s = &self.spec;
        let m = s.m();
        let sq: Vec<f64> = s.nu.iter().map(|v| v.sqrt()).collect();
        let a = DMatrix::from_fn(m, m, |i, j| self.lambda[i] * sq[j]);
        let c = DVector::from_fn(m, |j, _| sq[j] + self.lambda[j] * s.b[j] + self.zeta[j]);
        let d = s.r - s.eta * self.lambda.iter().sum::<f64>();
        Quadric::new(a, c, d)
    }

    pub fn score(&self, omegas: &[f64]) -> f64 {
        let s = &self.spec;
        let omega: f64 = omegas.iter().zip(&s.nu).map(|(w, v)| w * v.sqrt()).sum();
        let mut g = omega + s.r;
        for m in 0..s.m() {
            g += self.lambda[m] * (omega * omegas[m] + s.b[m] * omegas[m] - s.eta);
            g += self.zeta[m] * omegas[m];
        }
        g
    }

    pub fn accept(&self, omegas: &[f64]) -> bool {
        self.score(omegas) >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroEvaluation {
    pub residuals: Vec<f64>,
    pub monotonicity_values: Vec<f64>,
    pub value_receiver: f64,
    pub accept_probability: f64,
}

pub fn moments(mech: &QuadraticMechanism, mode: Expectation) -> Result<Moments> {
    let sd = vec![mech.spec.eta.sqrt(); mech.spec.m()];
    region_moments(&mech.quadric(), &sd, mode)
}

pub fn evaluate(mech: &QuadraticMechanism, mode: Expectation) -> Result<HeteroEvaluation> {
    let mom = moments(mech, mode)?;
    Ok(evaluation_from_moments(&mech.spec, &mom))
}

fn evaluation_from_moments(s: &BiasClassSpec, mom: &Moments) -> HeteroEvaluation {
    let m = s.m();
    let sq: Vec<f64> = s.nu.iter().map(|v| v.sqrt()).collect();
    let residuals = (0..m)
        .map(|k| {
            let cross: f64 = (0..m).map(|j| sq[j] * mom.m2[(j, k)]).sum();
            cross + s.b[k] * mom.m1[k] - s.eta * mom.p
        })
        .collect();
    let monotonicity_values = mom.m1.iter().copied().collect();
    let value_receiver = (0..m).map(|j| sq[j] * mom.m1[j]).sum::<f64>() + s.r * mom.p;
    HeteroEvaluation { residuals, monotonicity_values, value_receiver, accept_probability: mom.p }
}

/// Envelope residuals `E[sigma ((omega + b_m) omega_m - eta)]`.
pub fn moment_residuals(mech: &QuadraticMechanism, mode: Expectation) -> Result<Vec<f64>> {
    Ok(evaluate(mech, mode)?.residuals)
}

/// `E[sigma omega_m]`; must be nonnegative for interim monotonicity.
pub fn monotonicity_values(mech: &QuadraticMechanism, mode: Expectation) -> Result<Vec<f64>> {
    Ok(evaluate(mech, mode)?.monotonicity_values)
}

#[derive(Debug, Clone, Copy)]
pub struct HeteroOptions {
    pub mode: Expectation,
    pub newton: NewtonOptions,
    /// Largest residual accepted as converged.
    pub accept_tol: f64,
}

impl Default for HeteroOptions {
    fn default() -> Self {
        Self { mode: Expectation::Quadrature, newton: NewtonOptions::default(), accept_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroSolution {
    pub mechanism: QuadraticMechanism,
    pub evaluation: HeteroEvaluation,
    pub starts_tried: usize,
}

/// Solve with the monotonicity multipliers held at zero except on `active`.
fn solve_active(
    spec: &BiasClassSpec,
    active: &[usize],
    lambda0: &[f64],
    zeta0: &[f64],
    opts: &HeteroOptions,
) -> Option<(QuadraticMechanism, HeteroEvaluation, f64)> {
    let m = spec.m();
    let unpack = |x: &[f64]| {
        let lambda = x[..m].to_vec();
        let mut zeta = vec![0.0; m];
        for (i, &a) in active.iter().enumerate() {
            zeta[a] = x[m + i];
        }
        QuadraticMechanism { lambda, zeta, spec: spec.clone() }
    };
    let system = |x: &[f64]| -> Vec<f64> {
        let mech = unpack(x);
        match evaluate(&mech, opts.mode) {
            Ok(ev) => {
                let mut out = ev.residuals.clone();
                out.extend(active.iter().map(|&a| ev.monotonicity_values[a]));
                out
            }
            Err(_) => vec![f64::NAN; m + active.len()],
        }
    };
    let mut x0 = lambda0.to_vec();
    x0.extend(active.iter().map(|&a| zeta0[a]));
    let out = newton::solve(system, &x0, opts.newton);
    if !(out.norm <= opts.accept_tol) {
        return None;
    }
    let mech = unpack(&out.x);
    let ev = evaluate(&mech, opts.mode).ok()?;
    Some((mech, ev, out.norm))
}

/// Active-set pass over monotonicity constraints from one starting point.
fn solve_from(spec: &BiasClassSpec, lambda0: &[f64], opts: &HeteroOptions) -> std::result::Result<HeteroSolution, f64> {
    let m = spec.m();
    let mut active: Vec<usize> = vec![];
    let mut lambda = lambda0.to_vec();
    let mut zeta = vec![0.0; m];
    let tol = opts.accept_tol;
    for _ in 0..=2 * m {
        let Some((mech, ev, _)) = solve_active(spec, &active, &lambda, &zeta, opts) else {
            return Err(f64::INFINITY);
        };
        if ev.accept_probability <= 1e-9 {
            // Empty region satisfies every moment condition vacuously.
            return Err(0.0);
        }
        let drop: Vec<usize> = active.iter().copied().filter(|&a| mech.zeta[a] < 0.0).collect();
        let add: Vec<usize> =
            (0..m).filter(|a| !active.contains(a) && ev.monotonicity_values[*a] < -tol).collect();
        lambda = mech.lambda.clone();
        zeta = mech.zeta.iter().map(|z| z.max(0.0)).collect();
        if drop.is_empty() && add.is_empty() {
            return Ok(HeteroSolution { mechanism: mech, evaluation: ev, starts_tried: 0 });
        }
        active.retain(|a| !drop.contains(a));
        active.extend(add);
        active.sort_unstable();
    }
    Err(f64::INFINITY)
}

fn start_grid(m: usize) -> Vec<Vec<f64>> {
    let levels = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut out = vec![vec![]];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|p| {
                levels.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

pub fn solve(spec: &BiasClassSpec, opts: HeteroOptions) -> Result<HeteroSolution> {
    let m = spec.m();
    if m > 3 && opts.mode == Expectation::Quadrature {
        return Err(Error::QuadratureDimension(m));
    }
    let zero = vec![0.0; m];
    if let Ok(mut sol) = solve_from(spec, &zero, &opts) {
        sol.starts_tried = 1;
        return Ok(sol);
    }
    let mut best: Option<HeteroSolution> = None;
    let mut dump = vec![];
    let starts = start_grid(m);
    for start in &starts {
        match solve_from(spec, start, &opts) {
            Ok(sol) => {
                let better = best
                    .as_ref()
                    .is_none_or(|b| sol.evaluation.value_receiver > b.evaluation.value_receiver);
                if better {
                    best = Some(sol);
                }
            }
            Err(norm) => dump.push(format!("{start:?} -> {norm:e}")),
        }
    }
    if let Some(mut sol) = best {
        sol.starts_tried = 1 + starts.len();
        return Ok(sol);
    }
    if m > 1 && spec.b.windows(2).all(|w| w[0] == w[1]) {
        return solve_pooled(spec, &opts);
    }
    Err(Error::NoConvergence(dump.join("; ")))
}

/// Equal biases: one common multiplier, matched on the summed residual.
fn solve_pooled(spec: &BiasClassSpec, opts: &HeteroOptions) -> Result<HeteroSolution> {
    let m = spec.m();
    let system = |x: &[f64]| -> Vec<f64> {
        let mech = QuadraticMechanism { lambda: vec![x[0]; m], zeta: vec![0.0; m], spec: spec.clone() };
        match evaluate(&mech, opts.mode) {
            Ok(ev) => vec![ev.residuals.iter().sum()],
            Err(_) => vec![f64::NAN],
        }
    };
    for start in [0.0, -0.5, -1.0, -2.0, 0.5] {
        let out = newton::solve(system, &[start], opts.newton);
        if out.norm <= opts.accept_tol {
            let mech = QuadraticMechanism { lambda: vec![out.x[0]; m], zeta: vec![0.0; m], spec: spec.clone() };
            let evaluation = evaluate(&mech, opts.mode)?;
            if evaluation.accept_probability > 1e-9 {
                return Ok(HeteroSolution { mechanism: mech, evaluation, starts_tried: 0 });
            }
        }
    }
    Err(Error::NoConvergence("pooled equal-bias reduction failed".into()))
}

/// Accept grid over `[lo1, hi1] x [lo2, hi2]` for two classes.
pub fn region_grid(mech: &QuadraticMechanism, bounds: [(f64, f64); 2], resolution: usize) -> Result<RegionGrid> {
    if mech.spec.m() != 2 {
        return invalid("region grid is defined for exactly two classes");
    }
    if resolution < 2 {
        return invalid("resolution must be at least 2");
    }
    let xs = linspace(bounds[0].0, bounds[0].1, resolution);
    let ys = linspace(bounds[1].0, bounds[1].1, resolution);
    Ok(fill("omega1", "omega2", xs, ys, |x, y| mech.accept(&[x, y])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> BiasClassSpec {
        BiasClassSpec::new(vec![0.1, 0.3], vec![0.5, 0.5], 1.0, 0.0).unwrap()
    }

    #[test]
    fn zero_multipliers_are_first_best() {
        let mech = QuadraticMechanism::new(vec![0.0; 2], vec![0.0; 2], example()).unwrap();
        assert!(mech.accept(&[0.1, -0.1]));
        assert!(!mech.accept(&[-0.1, 0.0]));
        assert!(mech.accept(&[0.0, 0.0]));
    }

    #[test]
    fn origin_score() {
        let mech = QuadraticMechanism::new(vec![-0.4, 0.3], vec![0.0; 2], example()).unwrap();
        assert!((mech.score(&[0.0, 0.0]) - (0.4 - 0.3)).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert!(BiasClassSpec::new(vec![0.1], vec![0.9], 1.0, 0.0).is_err());
        assert!(BiasClassSpec::new(vec![0.1, 0.2], vec![0.5, 0.5], 1.0, 0.15).is_err());
    }

    #[test]
    fn start_grid_size() {
        assert_eq!(start_grid(2).len(), 25);
        assert_eq!(start_grid(3).len(), 125);
    }
}

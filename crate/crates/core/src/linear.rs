//! General sender and receiver payoffs.
//!
//! With linear payoffs `u_s = t_s.h`, `u_r = t_r.h` the optimum depends on
//! `(omega_s, omega_r)`, a standard bivariate normal with correlation `gamma`.
//! For arbitrary smooth payoffs this module checks the envelope and
//! second-order conditions by Monte Carlo and verifies the pointwise
//! optimality form for given multipliers.

use crate::error::{invalid, Error, Result};
use crate::grid::{fill, linspace, RegionGrid};
use crate::model::SignalDistribution;
use crate::numerics::newton::{self, NewtonOptions};
use crate::numerics::region::{region_moments, Expectation, Quadric};
use crate::sampling::{shard_rng, shard_sizes, Moments1, NefSampler};
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPayoffSpec {
    pub f: Vec<f64>,
    pub t_s: Vec<f64>,
    pub t_r: Vec<f64>,
    pub gamma: f64,
}

pub fn compute_gamma(f: &[f64], t_s: &[f64], t_r: &[f64]) -> f64 {
    f.iter().zip(t_s).zip(t_r).map(|((p, s), r)| p * s * r).sum()
}

impl LinearPayoffSpec {
    pub fn new(f: Vec<f64>, t_s: Vec<f64>, t_r: Vec<f64>) -> Result<Self> {
        let gamma = compute_gamma(&f, &t_s, &t_r);
        let spec = Self { f, t_s, t_r, gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn k(&self) -> usize {
        self.f.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.f.len();
        if k < 2 || self.t_s.len() != k || self.t_r.len() != k {
            return invalid("f, t_s and t_r need a common length K >= 2");
        }
        let fail = |what: &str, v: f64| Err(Error::Normalization(format!("{what} = {v}")));
        let total: f64 = self.f.iter().sum();
        if self.f.iter().any(|&p| !(p > 0.0)) || (total - 1.0).abs() > NORM_TOL {
            return fail("sum f", total);
        }
        for (name, t) in [("t_s", &self.t_s), ("t_r", &self.t_r)] {
            let mean: f64 = self.f.iter().zip(t).map(|(p, x)| p * x).sum();
            if mean.abs() > NORM_TOL {
                return fail(&format!("sum f {name}"), mean);
            }
            let second: f64 = self.f.iter().zip(t).map(|(p, x)| p * x * x).sum();
            if (second - 1.0).abs() > NORM_TOL {
                return fail(&format!("sum f {name}^2"), second);
            }
            if t.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Normalization(format!("{name} is not increasing in k")));
            }
        }
        let gamma = compute_gamma(&self.f, &self.t_s, &self.t_r);
        if (gamma - self.gamma).abs() > NORM_TOL {
            return fail("gamma mismatch, sum f t_r t_s", gamma);
        }
        if !(gamma.abs() < 1.0 - 1e-9) {
            return fail("|gamma| must be below 1; gamma", gamma);
        }
        Ok(())
    }

    /// Map from independent standard coordinates `x` to `(omega_s, omega_r)`.
    fn whitening(&self) -> Matrix2<f64> {
        let g = self.gamma;
        Matrix2::new(1.0, 0.0, g, (1.0 - g * g).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPrefMechanism {
    pub lambda_r: f64,
    pub lambda_s: f64,
    /// `K + 1` entries; the first and last are always zero.
    pub zeta: Vec<f64>,
}

impl LinearPrefMechanism {
    pub fn unconstrained(lambda_r: f64, lambda_s: f64, k: usize) -> Self {
        Self { lambda_r, lambda_s, zeta: vec![0.0; k + 1] }
    }

    fn zeta_loadings(&self, spec: &LinearPayoffSpec) -> (f64, f64) {
        let g = spec.gamma;
        let (mut cr, mut cs) = (0.0, 0.0);
        for k in 0..spec.k() {
            let dz = self.zeta[k] - self.zeta[k + 1];
            cr += (spec.t_r[k] - g * spec.t_s[k]) * dz;
            cs += (spec.t_s[k] - g * spec.t_r[k]) * dz;
        }
        (cr, cs)
    }

    pub fn score(&self, omega_r: f64, omega_s: f64, spec: &LinearPayoffSpec) -> f64 {
        let g = spec.gamma;
        let (cr, cs) = self.zeta_loadings(spec);
        omega_r + (self.lambda_r * omega_r + self.lambda_s * omega_s) * omega_s - g * self.lambda_r - self.lambda_s
            + omega_r * cr
            + omega_s * cs
    }

    pub fn accept(&self, omega_r: f64, omega_s: f64, spec: &LinearPayoffSpec) -> bool {
        self.score(omega_r, omega_s, spec) >= 0.0
    }

    fn quadric(&self, spec: &LinearPayoffSpec) -> Quadric {
        let g = spec.gamma;
        let rho = (1.0 - g * g).sqrt();
        let (cr, cs) = self.zeta_loadings(spec);
        let a11 = self.lambda_s + self.lambda_r * g;
        let a12 = 0.5 * self.lambda_r * rho;
        let a = DMatrix::from_row_slice(2, 2, &[a11, a12, a12, 0.0]);
        let c = DVector::from_row_slice(&[(1.0 + cr) * g + cs, (1.0 + cr) * rho]);
        Quadric::new(a, c, -g * self.lambda_r - self.lambda_s)
    }
}

/// Region moments in `(omega_s, omega_r)` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMoments {
    pub p: f64,
    pub mean: Vector2<f64>,
    pub second: Matrix2<f64>,
}

pub fn payoff_moments(mech: &LinearPrefMechanism, spec: &LinearPayoffSpec) -> Result<PayoffMoments> {
    if !(spec.gamma.abs() < 1.0) {
        return invalid("|gamma| must be below 1");
    }
    if mech.zeta.len() != spec.k() + 1 {
        return invalid("zeta needs K + 1 entries");
    }
    let mom = region_moments(&mech.quadric(spec), &[1.0, 1.0], Expectation::Quadrature)?;
    let l = spec.whitening();
    let m1 = Vector2::new(mom.m1[0], mom.m1[1]);
    let m2 = Matrix2::new(mom.m2[(0, 0)], mom.m2[(0, 1)], mom.m2[(1, 0)], mom.m2[(1, 1)]);
    Ok(PayoffMoments { p: mom.p, mean: l * m1, second: l * m2 * l.transpose() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearEvaluation {
    pub residuals: [f64; 2],
    pub monotonicity_terms: [f64; 2],
    /// One combination per adjacent pair `(k - 1, k)`, `k = 2..K`.
    pub monotonicity_combinations: Vec<f64>,
    pub value_receiver: f64,
    pub accept_probability: f64,
}

pub fn evaluate(mech: &LinearPrefMechanism, spec: &LinearPayoffSpec) -> Result<LinearEvaluation> {
    Ok(evaluate_moments(&payoff_moments(mech, spec)?, spec))
}

pub fn evaluate_moments(m: &PayoffMoments, spec: &LinearPayoffSpec) -> LinearEvaluation {
    let g = spec.gamma;
    let residuals = [m.second[(0, 0)] - m.p, m.second[(0, 1)] - g * m.p];
    let terms = [m.mean[0] - g * m.mean[1], m.mean[1] - g * m.mean[0]];
    let combos = (1..spec.k())
        .map(|k| (spec.t_s[k] - spec.t_s[k - 1]) * terms[0] + (spec.t_r[k] - spec.t_r[k - 1]) * terms[1])
        .collect();
    LinearEvaluation {
        residuals,
        monotonicity_terms: terms,
        monotonicity_combinations: combos,
        value_receiver: m.mean[1],
        accept_probability: m.p,
    }
}

/// `(E[sigma (omega_s^2 - 1)], E[sigma (omega_s omega_r - gamma)])`.
pub fn moment_residuals(mech: &LinearPrefMechanism, spec: &LinearPayoffSpec) -> Result<[f64; 2]> {
    Ok(evaluate(mech, spec)?.residuals)
}

/// `(E[sigma (omega_s - gamma omega_r)], E[sigma (omega_r - gamma omega_s)])`.
pub fn monotonicity_terms(mech: &LinearPrefMechanism, spec: &LinearPayoffSpec) -> Result<[f64; 2]> {
    Ok(evaluate(mech, spec)?.monotonicity_terms)
}

/// Per-type envelope terms `E[sigma omega_s h_k / f_k] - t_{s,k} E[sigma]`, from
/// `E[h_k | omega_s, omega_r]`.
pub fn envelope_terms(mech: &LinearPrefMechanism, spec: &LinearPayoffSpec) -> Result<Vec<f64>> {
    let m = payoff_moments(mech, spec)?;
    let g = spec.gamma;
    let inv = 1.0 / (1.0 - g * g);
    Ok((0..spec.k())
        .map(|k| {
            let (ts, tr) = (spec.t_s[k], spec.t_r[k]);
            inv * ((ts - g * tr) * m.second[(0, 0)] + (tr - g * ts) * m.second[(0, 1)]) - ts * m.p
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSolution {
    pub mechanism: LinearPrefMechanism,
    pub evaluation: LinearEvaluation,
    pub ironing_required: bool,
}

pub fn solve(spec: &LinearPayoffSpec, opts: NewtonOptions) -> Result<LinearSolution> {
    spec.validate()?;
    let k = spec.k();
    let system = |x: &[f64]| match evaluate(&LinearPrefMechanism::unconstrained(x[0], x[1], k), spec) {
        Ok(ev) => ev.residuals.to_vec(),
        Err(_) => vec![f64::NAN; 2],
    };
    let accept_tol = 1e-8;
    let levels = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut starts = vec![[0.0, 0.0]];
    starts.extend(levels.iter().flat_map(|&a| levels.iter().map(move |&b| [a, b])));
    let mut best: Option<(LinearPrefMechanism, LinearEvaluation)> = None;
    let mut dump = vec![];
    for (i, s) in starts.iter().enumerate() {
        let out = newton::solve(system, s, opts);
        let mech = LinearPrefMechanism::unconstrained(out.x[0], out.x[1], k);
        let ok = out.norm <= accept_tol;
        let ev = if ok { evaluate(&mech, spec).ok() } else { None };
        match ev {
            Some(ev) if ev.accept_probability > 1e-9 => {
                if best.as_ref().is_none_or(|(_, b)| ev.value_receiver > b.value_receiver) {
                    best = Some((mech, ev));
                }
                if i == 0 {
                    break;
                }
            }
            _ => dump.push(format!("{s:?} -> {:e}", out.norm)),
        }
    }
    let (mechanism, evaluation) = best.ok_or_else(|| Error::NoConvergence(dump.join("; ")))?;
    let ironing_required = evaluation.monotonicity_combinations.iter().any(|&c| c < -1e-9);
    Ok(LinearSolution { mechanism, evaluation, ironing_required })
}

/// Accept grid over `omega_s` (x-axis) and `omega_r` (y-axis).
pub fn region_grid(
    mech: &LinearPrefMechanism,
    spec: &LinearPayoffSpec,
    bounds: [(f64, f64); 2],
    resolution: usize,
) -> Result<RegionGrid> {
    if resolution < 2 {
        return invalid("resolution must be at least 2");
    }
    let xs = linspace(bounds[0].0, bounds[0].1, resolution);
    let ys = linspace(bounds[1].0, bounds[1].1, resolution);
    Ok(fill("omega_s", "omega_r", xs, ys, |s, r| mech.accept(r, s, spec)))
}

/// A payoff on the NEF space with derivatives.
pub trait SmoothPayoff: Sync {
    fn value(&self, h: &[f64]) -> f64;
    fn gradient(&self, h: &[f64]) -> Vec<f64>;
    fn hessian(&self, h: &[f64]) -> DMatrix<f64>;
    fn growth_order(&self) -> f64 {
        2.0
    }
}

/// `loadings . h + shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPayoff {
    pub loadings: Vec<f64>,
    pub shift: f64,
}

impl SmoothPayoff for LinearPayoff {
    fn value(&self, h: &[f64]) -> f64 {
        self.shift + self.loadings.iter().zip(h).map(|(a, x)| a * x).sum::<f64>()
    }
    fn gradient(&self, _h: &[f64]) -> Vec<f64> {
        self.loadings.clone()
    }
    fn hessian(&self, h: &[f64]) -> DMatrix<f64> {
        DMatrix::zeros(h.len(), h.len())
    }
}

/// Largest relative gap between the analytic gradient and central differences,
/// over random Gaussian probes.
pub fn gradient_check(u: &dyn SmoothPayoff, k: usize, probes: usize, seed: u64) -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let h: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let g = u.gradient(&h);
        for i in 0..k {
            let step = 1e-6 * h[i].abs().max(1.0);
            let (mut hp, mut hm) = (h.clone(), h.clone());
            hp[i] += step;
            hm[i] -= step;
            let fd = (u.value(&hp) - u.value(&hm)) / (2.0 * step);
            worst = worst.max((fd - g[i]).abs() / g[i].abs().max(1.0));
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub shards: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicitySlack {
    pub k: usize,
    pub l: usize,
    pub slack: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralIclReport {
    /// Envelope terms minus their mean.
    pub envelope: Vec<f64>,
    pub envelope_se: Vec<f64>,
    /// Mean of the raw envelope terms, the estimate of the common level `U`.
    pub u_estimate: f64,
    pub u_se: f64,
    pub monotonicity: Vec<MonotonicitySlack>,
}

/// Monte Carlo check of the envelope and second-order conditions for a general sender payoff.
pub fn icl_general_residuals<S>(
    sigma: S,
    u_s: &dyn SmoothPayoff,
    dist: &SignalDistribution,
    cfg: McConfig,
) -> Result<GeneralIclReport>
where
    S: Fn(&[f64]) -> bool + Sync,
{
    if cfg.samples < 2 {
        return Err(Error::SampleBudget("at least two samples are needed for standard errors".into()));
    }
    let k = dist.k();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (0..a).map(move |b| (a, b))).collect();
    // Layout: K centred envelope terms, the raw mean term, then one slack per pair.
    let dim = k + 1 + pairs.len();
    let sampler = NefSampler::new(dist);
    let sizes = shard_sizes(cfg.samples, cfg.shards);
    let partials: Vec<Moments1> = sizes
        .par_iter()
        .enumerate()
        .map(|(shard, &n)| {
            let mut rng = shard_rng(cfg.seed, shard as u64);
            let mut acc = Moments1::new(dim);
            let mut h = vec![0.0; k];
            let mut row = vec![0.0; dim];
            for _ in 0..n {
                sampler.sample(&mut rng, &mut h);
                if !sigma(&h) {
                    acc.push_zeros(1);
                    continue;
                }
                let u = u_s.value(&h);
                let g = u_s.gradient(&h);
                let hess = u_s.hessian(&h);
                let mut mean = 0.0;
                for i in 0..k {
                    row[i] = u * h[i] / dist.f[i] - g[i];
                    mean += row[i];
                }
                mean /= k as f64;
                for v in row[..k].iter_mut() {
                    *v -= mean;
                }
                row[k] = mean;
                for (p, &(a, b)) in pairs.iter().enumerate() {
                    let lhs = (h[a] / dist.f[a] - h[b] / dist.f[b]) * (g[a] - g[b]);
                    let curv = hess[(a, a)] + hess[(b, b)] - 2.0 * hess[(a, b)];
                    row[k + 1 + p] = lhs - curv;
                }
                acc.push(&row);
            }
            acc
        })
        .collect();
    let mut total = Moments1::new(dim);
    for p in &partials {
        total.merge(p);
    }
    let monotonicity = pairs
        .iter()
        .enumerate()
        .map(|(p, &(a, b))| MonotonicitySlack { k: a, l: b, slack: total.mean(k + 1 + p), se: total.se(k + 1 + p) })
        .collect();
    Ok(GeneralIclReport {
        envelope: (0..k).map(|i| total.mean(i)).collect(),
        envelope_se: (0..k).map(|i| total.se(i)).collect(),
        u_estimate: total.mean(k),
        u_se: total.se(k),
        monotonicity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalityCheck {
    pub holds: bool,
    pub checked: usize,
    pub exempt: usize,
    pub mismatches: usize,
}

/// Verify pointwise that `sigma(h) = 1` exactly when
/// `u_r(h) + sum_k lambda_k (h_k / f_k u_s(h) - du_s/dh_k(h)) >= 0`, skipping
/// sampled points within `1e-9` of the boundary.
pub fn check_optimality_form<S>(
    sigma: S,
    u_r: &dyn SmoothPayoff,
    u_s: &dyn SmoothPayoff,
    lambda: &[f64],
    dist: &SignalDistribution,
    samples: usize,
    seed: u64,
) -> Result<OptimalityCheck>
where
    S: Fn(&[f64]) -> bool,
{
    let k = dist.k();
    if lambda.len() != k {
        return invalid("lambda needs K entries");
    }
    let sampler = NefSampler::new(dist);
    let mut rng = shard_rng(seed, 0);
    let mut h = vec![0.0; k];
    let (mut exempt, mut mismatches) = (0, 0);
    for _ in 0..samples {
        sampler.sample(&mut rng, &mut h);
        let us = u_s.value(&h);
        let g = u_s.gradient(&h);
        let score = u_r.value(&h) + (0..k).map(|i| lambda[i] * (h[i] / dist.f[i] * us - g[i])).sum::<f64>();
        if score.abs() <= 1e-9 {
            exempt += 1;
        } else if sigma(&h) != (score >= 0.0) {
            mismatches += 1;
        }
    }
    Ok(OptimalityCheck { holds: mismatches == 0, checked: samples - exempt, exempt, mismatches })
}

/// Example with three types: `rho = sqrt(3/14)`, `t_r = rho (-2, -1, 3)`,
/// `t_s = rho sqrt(7) (-1, 0, 1)`, equal probabilities.
pub fn three_type_example() -> LinearPayoffSpec {
    let rho = (3.0f64 / 14.0).sqrt();
    let s7 = 7f64.sqrt();
    let f = vec![1.0 / 3.0; 3];
    let t_r = vec![-2.0 * rho, -rho, 3.0 * rho];
    let t_s = vec![-rho * s7, 0.0, rho * s7];
    LinearPayoffSpec::new(f, t_s, t_r).expect("example normalizations hold")
}

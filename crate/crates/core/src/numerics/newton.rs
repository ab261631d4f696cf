//! Damped Newton iteration with a forward-difference Jacobian.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relative finite-difference step; the absolute step is `fd_step * max(1, |x|)`.
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 60, fd_step: 1e-5 }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
    pub norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn solve<F>(mut f: F, x0: &[f64], opts: NewtonOptions) -> NewtonOutcome
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut norm = inf_norm(&fx);
    for it in 0..opts.max_iter {
        if !norm.is_finite() {
            break;
        }
        if norm <= opts.tol {
            return NewtonOutcome { x, residual: fx, norm, iterations: it, converged: true };
        }
        let m = fx.len();
        let mut jac = DMatrix::zeros(m, n);
        for j in 0..n {
            let h = opts.fd_step * x[j].abs().max(1.0);
            let mut xp = x.clone();
            xp[j] += h;
            let fp = f(&xp);
            for i in 0..m {
                jac[(i, j)] = (fp[i] - fx[i]) / h;
            }
        }
        let rhs = DVector::from_iterator(m, fx.iter().map(|v| -v));
        let step = match jac.lu().solve(&rhs) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => break,
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            let ft = f(&trial);
            let nt = inf_norm(&ft);
            if nt.is_finite() && nt < norm {
                x = trial;
                fx = ft;
                norm = nt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let converged = norm <= opts.tol;
    NewtonOutcome { x, residual: fx, norm, iterations: opts.max_iter, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_dimensional_system() {
        let out = solve(
            |x| vec![x[0] * x[0] + x[1] * x[1] - 4.0, x[0] - x[1]],
            &[1.0, 0.5],
            NewtonOptions::default(),
        );
        assert!(out.converged);
        assert!((out.x[0] - 2f64.sqrt()).abs() < 1e-8);
    }
}

//! Receiver-optimal mechanisms for a finite number of senders.
//!
//! Mechanisms are symmetric, so they live on type-count profiles. Incentive
//! constraints are the ordered pairwise ones. In the LP they are written through
//! interim aggregates: with `q_kj = P(n_j) n_jk / (f_k N)`,
//! `U_k = sum_j q_kj sigma_j (omega_j + b)` and `Q_k = sum_j q_kj sigma_j`,
//! a type `k` sender who reports `l` gets `U_l + (t_k - t_l) Q_l / sqrt(N)`.

use crate::error::{invalid, Error, Result};
use crate::model::{Preferences, SignalDistribution};
use highs::{HighsModelStatus, RowProblem, Sense};
use std::collections::HashMap;

pub const DEFAULT_PROFILE_CAP: usize = 500_000;

#[derive(Debug, Clone)]
pub struct ProfileTable {
    pub k: usize,
    pub n: u32,
    counts: Vec<u32>,
    pub prob: Vec<f64>,
    pub omega: Vec<f64>,
    index: HashMap<Vec<u32>, usize>,
}

impl ProfileTable {
    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn profile(&self, j: usize) -> &[u32] {
        &self.counts[j * self.k..(j + 1) * self.k]
    }

    pub fn find(&self, counts: &[u32]) -> Option<usize> {
        self.index.get(counts).copied()
    }
}

/// `C(N + K - 1, K - 1)`, saturating.
pub fn profile_count(k: usize, n: u32) -> u128 {
    let (top, r) = (n as u128 + k as u128 - 1, (k as u128 - 1).min(n as u128));
    let mut c: u128 = 1;
    for i in 0..r {
        c = c.saturating_mul(top - i) / (i + 1);
    }
    c
}

fn compositions(k: usize, n: u32, prefix: &mut Vec<u32>, out: &mut Vec<u32>) {
    if prefix.len() == k - 1 {
        prefix.push(n);
        out.extend_from_slice(prefix);
        prefix.pop();
        return;
    }
    for first in (0..=n).rev() {
        prefix.push(first);
        compositions(k, n - first, prefix, out);
        prefix.pop();
    }
}

/// All count vectors summing to `n`, first coordinate descending.
pub fn enumerate_profiles(dist: &SignalDistribution, n: u32, cap: usize) -> Result<ProfileTable> {
    let k = dist.k();
    if n == 0 {
        return invalid("N must be at least 1");
    }
    let count = profile_count(k, n);
    if count > cap as u128 {
        return Err(Error::ProfileCapExceeded { count, cap });
    }
    let mut counts = Vec::with_capacity(count as usize * k);
    compositions(k, n, &mut Vec::with_capacity(k), &mut counts);
    let nf = n as f64;
    let ln_f: Vec<f64> = dist.f.iter().map(|p| p.ln()).collect();
    let base = libm::lgamma(nf + 1.0);
    let sq = nf.sqrt();
    let mut prob = Vec::with_capacity(count as usize);
    let mut omega = Vec::with_capacity(count as usize);
    let mut index = HashMap::with_capacity(count as usize);
    for (j, c) in counts.chunks_exact(k).enumerate() {
        let mut lp = base;
        let mut w = 0.0;
        for i in 0..k {
            if c[i] > 0 {
                lp += c[i] as f64 * ln_f[i] - libm::lgamma(c[i] as f64 + 1.0);
                w += c[i] as f64 * dist.t[i];
            }
        }
        prob.push(lp.exp());
        omega.push(w / sq);
        index.insert(c.to_vec(), j);
    }
    Ok(ProfileTable { k, n, counts, prob, omega, index })
}

fn check_len(sigma: &[f64], table: &ProfileTable) -> Result<()> {
    if sigma.len() != table.len() {
        return invalid(format!("mechanism has {} entries, table has {}", sigma.len(), table.len()));
    }
    Ok(())
}

/// Truthful and deviation interim payoffs of a type-`k` sender reporting `l`,
/// computed by remapping each profile to `n - e_k + e_l`.
pub fn ic_lhs_rhs(
    sigma: &[f64],
    table: &ProfileTable,
    dist: &SignalDistribution,
    b: f64,
    k: usize,
    l: usize,
) -> Result<(f64, f64)> {
    check_len(sigma, table)?;
    if k == l || k >= table.k || l >= table.k {
        return invalid("ic_lhs_rhs needs distinct indices within range");
    }
    let scale = dist.f[k] * table.n as f64;
    let (mut lhs, mut rhs) = (0.0, 0.0);
    let mut dev = vec![0u32; table.k];
    for j in 0..table.len() {
        let c = table.profile(j);
        if c[k] == 0 {
            continue;
        }
        let w = table.prob[j] * c[k] as f64 / scale;
        let gain = table.omega[j] + b;
        lhs += w * sigma[j] * gain;
        dev.copy_from_slice(c);
        dev[k] -= 1;
        dev[l] += 1;
        let jd = table.find(&dev).expect("deviation profile is in the table");
        rhs += w * sigma[jd] * gain;
    }
    Ok((lhs, rhs))
}

/// Interim aggregates `(U_k, Q_k)` for every type.
pub fn interim(sigma: &[f64], table: &ProfileTable, dist: &SignalDistribution, b: f64) -> (Vec<f64>, Vec<f64>) {
    let k = table.k;
    let (mut u, mut q) = (vec![0.0; k], vec![0.0; k]);
    let nf = table.n as f64;
    for j in 0..table.len() {
        let c = table.profile(j);
        for i in 0..k {
            if c[i] > 0 {
                let w = table.prob[j] * c[i] as f64 / (dist.f[i] * nf) * sigma[j];
                q[i] += w;
                u[i] += w * (table.omega[j] + b);
            }
        }
    }
    (u, q)
}

/// Largest deviation gain over all ordered type pairs, clamped at zero.
pub fn check_ic(sigma: &[f64], table: &ProfileTable, dist: &SignalDistribution, b: f64) -> Result<f64> {
    check_len(sigma, table)?;
    let (u, q) = interim(sigma, table, dist, b);
    let sq = (table.n as f64).sqrt();
    let mut worst = 0.0f64;
    for k in 0..table.k {
        for l in 0..table.k {
            if k != l {
                let rhs = u[l] + (dist.t[k] - dist.t[l]) / sq * q[l];
                worst = worst.max(rhs - u[k]);
            }
        }
    }
    Ok(worst)
}

/// Receiver obedience after accept and after reject recommendations.
pub fn check_obedience(sigma: &[f64], table: &ProfileTable, r: f64) -> Result<(bool, bool)> {
    check_len(sigma, table)?;
    let (mut acc, mut rej) = (0.0, 0.0);
    for j in 0..table.len() {
        let g = table.prob[j] * (table.omega[j] + r);
        acc += sigma[j] * g;
        rej += (1.0 - sigma[j]) * g;
    }
    let tol = 1e-12;
    Ok((acc >= -tol, rej <= tol))
}

/// `(E[sigma (omega + r)], E[sigma (omega + b)])`.
pub fn evaluate_mechanism(sigma: &[f64], table: &ProfileTable, prefs: Preferences) -> Result<(f64, f64)> {
    check_len(sigma, table)?;
    let (mut vr, mut vs) = (0.0, 0.0);
    for j in 0..table.len() {
        let w = table.prob[j] * sigma[j];
        vr += w * (table.omega[j] + prefs.r);
        vs += w * (table.omega[j] + prefs.b);
    }
    Ok((vr, vs))
}

pub fn sender_preferred_table(table: &ProfileTable, b: f64) -> Vec<f64> {
    table.omega.iter().map(|&w| if crate::model::sender_preferred(w, b) { 1.0 } else { 0.0 }).collect()
}

pub fn receiver_first_best_table(table: &ProfileTable, r: f64) -> Vec<f64> {
    table.omega.iter().map(|&w| if crate::model::receiver_first_best(w, r) { 1.0 } else { 0.0 }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMechanism {
    pub sigma: Vec<f64>,
    pub value_receiver: f64,
    pub value_sender: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpReport {
    pub objective: f64,
    pub ic_gap: f64,
    pub obedient: (bool, bool),
    pub status: String,
    pub iterations: i64,
    pub variables: usize,
    pub constraints: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    pub profile_cap: usize,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { profile_cap: DEFAULT_PROFILE_CAP, feasibility_tol: 1e-9, optimality_tol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct FiniteSolution {
    pub table: ProfileTable,
    pub mechanism: FiniteMechanism,
    pub report: LpReport,
}

pub fn solve_optimal(dist: &SignalDistribution, prefs: Preferences, n: u32, opts: LpOptions) -> Result<FiniteSolution> {
    let table = enumerate_profiles(dist, n, opts.profile_cap)?;
    solve_on_table(table, dist, prefs, opts)
}

pub fn solve_on_table(
    table: ProfileTable,
    dist: &SignalDistribution,
    prefs: Preferences,
    opts: LpOptions,
) -> Result<FiniteSolution> {
    let k = table.k;
    let nf = table.n as f64;
    let sq = nf.sqrt();
    let cost: Vec<f64> = (0..table.len()).map(|j| table.prob[j] * (table.omega[j] + prefs.r)).collect();
    let cmax = cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let cscale = if cmax > 0.0 { 1.0 / cmax } else { 1.0 };

    let mut pb = RowProblem::default();
    let sig: Vec<_> = cost.iter().map(|c| pb.add_column(c * cscale, 0.0..=1.0)).collect();
    let u: Vec<_> = (0..k).map(|_| pb.add_column::<f64, _>(0.0, ..)).collect();
    let q: Vec<_> = (0..k).map(|_| pb.add_column::<f64, _>(0.0, ..)).collect();

    let mut urow: Vec<Vec<_>> = (0..k).map(|i| vec![(u[i], -1.0)]).collect();
    let mut qrow: Vec<Vec<_>> = (0..k).map(|i| vec![(q[i], -1.0)]).collect();
    for j in 0..table.len() {
        let c = table.profile(j);
        for i in 0..k {
            if c[i] > 0 {
                let w = table.prob[j] * c[i] as f64 / (dist.f[i] * nf);
                qrow[i].push((sig[j], w));
                urow[i].push((sig[j], w * (table.omega[j] + prefs.b)));
            }
        }
    }
    for row in urow.into_iter().chain(qrow) {
        pb.add_row(0.0..=0.0, row);
    }
    for kk in 0..k {
        for l in 0..k {
            if kk != l {
                let shift = (dist.t[kk] - dist.t[l]) / sq;
                pb.add_row(0.0.., [(u[kk], 1.0), (u[l], -1.0), (q[l], -shift)]);
            }
        }
    }
    let variables = pb.num_cols();
    let constraints = pb.num_rows();

    let mut model = pb.optimise(Sense::Maximise);
    model.make_quiet();
    model.set_option("primal_feasibility_tolerance", opts.feasibility_tol);
    model.set_option("dual_feasibility_tolerance", opts.optimality_tol);
    model.set_option("threads", 1);
    let solved = model.solve();
    let status = solved.status();
    if status != HighsModelStatus::Optimal {
        return Err(Error::Solver(format!("{status:?}")));
    }
    let iterations = solved.simplex_iteration_count();
    let cols = solved.get_solution().columns().to_vec();
    let mut sigma: Vec<f64> = cols[..table.len()].iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let (mut value_receiver, mut value_sender) = evaluate_mechanism(&sigma, &table, prefs)?;
    // Ties are common when sender-preferred is optimal; report it as the canonical optimum.
    let sp = sender_preferred_table(&table, prefs.b);
    let (sp_receiver, sp_sender) = evaluate_mechanism(&sp, &table, prefs)?;
    if sp_receiver >= value_receiver - opts.optimality_tol * value_receiver.abs().max(1.0) {
        sigma = sp;
        (value_receiver, value_sender) = (sp_receiver, sp_sender);
    }
    let ic_gap = check_ic(&sigma, &table, dist, prefs.b)?;
    let obedient = check_obedience(&sigma, &table, prefs.r)?;
    Ok(FiniteSolution {
        report: LpReport {
            objective: value_receiver,
            ic_gap,
            obedient,
            status: format!("{status:?}"),
            iterations,
            variables,
            constraints,
        },
        mechanism: FiniteMechanism { sigma, value_receiver, value_sender },
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_uniform_grid;

    #[test]
    fn profile_order_and_probabilities() {
        let d = make_uniform_grid(2, -1.0, 1.0).unwrap();
        let t = enumerate_profiles(&d, 2, DEFAULT_PROFILE_CAP).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.profile(0), &[2, 0]);
        assert_eq!(t.profile(1), &[1, 1]);
        assert_eq!(t.profile(2), &[0, 2]);
        assert!((t.prob[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_sender_probabilities_are_f() {
        let d = make_uniform_grid(3, -1.0, 1.0).unwrap();
        let t = enumerate_profiles(&d, 1, DEFAULT_PROFILE_CAP).unwrap();
        assert_eq!(t.len(), 3);
        for p in &t.prob {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let d = make_uniform_grid(50, -1.0, 1.0).unwrap();
        assert!(matches!(enumerate_profiles(&d, 5, 1000), Err(Error::ProfileCapExceeded { .. })));
    }

    #[test]
    fn profile_count_formula() {
        assert_eq!(profile_count(200, 2), 20100);
        assert_eq!(profile_count(2, 10), 11);
        assert_eq!(profile_count(5, 1), 5);
    }

    #[test]
    fn constant_mechanisms() {
        let d = make_uniform_grid(4, -1.0, 1.0).unwrap();
        let t = enumerate_profiles(&d, 3, DEFAULT_PROFILE_CAP).unwrap();
        let prefs = Preferences::new(0.3, 0.1).unwrap();
        let zero = vec![0.0; t.len()];
        assert_eq!(evaluate_mechanism(&zero, &t, prefs).unwrap(), (0.0, 0.0));
        let one = vec![1.0; t.len()];
        let (vr, vs) = evaluate_mechanism(&one, &t, prefs).unwrap();
        assert!((vr - 0.1).abs() < 1e-14 && (vs - 0.3).abs() < 1e-14);
        for k in 0..4 {
            let (lhs, rhs) = ic_lhs_rhs(&one, &t, &d, 0.3, k, (k + 1) % 4).unwrap();
            let expect = d.t[k] / 3f64.sqrt() + 0.3;
            assert!((lhs - expect).abs() < 1e-14 && (rhs - expect).abs() < 1e-14);
        }
    }
}

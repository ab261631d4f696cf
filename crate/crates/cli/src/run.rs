//! Dispatch from resolved parameters to the core solvers.

use icl_core::finite::{self, LpOptions};
use icl_core::hetero::{self, BiasClassSpec, HeteroOptions};
use icl_core::interval::{self, IntervalMechanism};
use icl_core::linear::{self, LinearPayoffSpec};
use icl_core::model::{self, make_uniform_grid, Preferences, SignalDistribution};
use icl_core::numerics::newton::NewtonOptions;
use icl_core::numerics::region::Expectation;
use icl_core::simulate::{self, SimConfig};
use serde_json::{json, Value};

use crate::config::*;
use crate::emit::{Cell, Output, Table};
use crate::error::CliError;

type Res = Result<Output, CliError>;

pub fn execute(cfg: &ExperimentConfig) -> Res {
    dispatch(&cfg.params)
}

fn dispatch(p: &Params) -> Res {
    match p {
        Params::SolveFinite(p) => solve_finite(p),
        Params::SolveInterval(p) => solve_interval(p),
        Params::SolveHetbias(p) => solve_hetero(p),
        Params::SolveLinear(p) => solve_linear(p),
        Params::SimulatePath(p) => simulate_path(p),
        Params::SimulateGap(p) => simulate_gap(p),
        Params::SimulateConvergence(p) => simulate_convergence(p),
        Params::SweepFinite(p) => sweep_finite(p),
        Params::SweepInterval(p) => sweep_interval(p),
        Params::BoundCurve(p) => bound_curve(p),
        Params::Figure { fig, spec, region } => figure(*fig, spec, region.as_ref()),
    }
}

fn dist(g: &GridParams) -> Result<SignalDistribution, CliError> {
    Ok(make_uniform_grid(g.grid_k, g.grid_lo, g.grid_hi)?)
}

fn lp_opts(cap: usize) -> LpOptions {
    LpOptions { profile_cap: cap, ..LpOptions::default() }
}

/// Expectation mode used for bias classes; deterministic either way.
pub fn hetero_mode(m: usize) -> Expectation {
    if m <= 3 {
        Expectation::Quadrature
    } else {
        Expectation::MonteCarlo { samples: 200_000, seed: 0 }
    }
}

fn finite_solution(p: &FiniteParams) -> Result<(SignalDistribution, finite::FiniteSolution, f64), CliError> {
    let d = dist(&p.grid)?;
    let prefs = Preferences::new(p.b, p.r)?;
    let sol = finite::solve_optimal(&d, prefs, p.n, lp_opts(p.profile_cap))?;
    let sp = finite::sender_preferred_table(&sol.table, p.b);
    let (sp_value, _) = finite::evaluate_mechanism(&sp, &sol.table, prefs)?;
    Ok((d, sol, sp_value))
}

fn solve_finite(p: &FiniteParams) -> Res {
    let (d, sol, sp_value) = finite_solution(p)?;
    let k = d.k();
    let mut cols: Vec<String> = (1..=k).map(|i| format!("n_{i}")).collect();
    cols.extend(["prob", "omega", "sigma"].map(String::from));
    let mut table = Table::with_columns(cols);
    let mut profiles = Vec::with_capacity(sol.table.len());
    for j in 0..sol.table.len() {
        let counts = sol.table.profile(j);
        let mut row: Vec<Cell> = counts.iter().map(|&c| Cell::I(c as i64)).collect();
        row.extend([Cell::F(sol.table.prob[j]), Cell::F(sol.table.omega[j]), Cell::F(sol.mechanism.sigma[j])]);
        table.push(row);
        profiles.push(counts.to_vec());
    }
    let rep = &sol.report;
    let record = json!({
        "b": p.b,
        "r": p.r,
        "n": p.n,
        "grid_k": p.grid.grid_k,
        "grid_lo": p.grid.grid_lo,
        "grid_hi": p.grid.grid_hi,
        "objective": rep.objective,
        "value_receiver": sol.mechanism.value_receiver,
        "value_sender": sol.mechanism.value_sender,
        "sender_preferred_value": sp_value,
        "ic_gap": rep.ic_gap,
        "obedient_accept": rep.obedient.0,
        "obedient_reject": rep.obedient.1,
        "status": rep.status,
        "iterations": rep.iterations,
        "variables": rep.variables,
        "constraints": rep.constraints,
        "profiles": profiles,
        "sigma": sol.mechanism.sigma,
    });
    Ok(Output { record, table, table_in_json: false })
}

pub fn interval_record(p: &IntervalParams) -> Result<(IntervalMechanism, Value), CliError> {
    let mech = interval::solve_alpha(p.b, p.r, p.var)?;
    let residual = if mech.degenerate { 0.0 } else { interval::aggregate_icl_residual(mech.alpha, p.b, p.r, p.var)? };
    let record = json!({
        "b": p.b,
        "r": p.r,
        "V": p.var,
        "alpha": mech.alpha,
        "omega_lo": mech.omega_lo,
        "omega_hi": mech.omega_hi,
        "value_receiver": interval::receiver_value(&mech, p.r),
        "value_sender": interval::sender_value(&mech, p.b),
        "degenerate": mech.degenerate,
        "aggregate_residual": residual,
    });
    Ok((mech, record))
}

fn solve_interval(p: &IntervalParams) -> Res {
    let (_, record) = interval_record(p)?;
    let names = ["b", "r", "V", "alpha", "omega_lo", "omega_hi", "value_receiver", "value_sender", "degenerate"];
    let mut table = Table::new(&names);
    table.push(
        names
            .iter()
            .map(|n| match &record[*n] {
                Value::Bool(b) => Cell::B(*b),
                v => Cell::F(v.as_f64().unwrap_or(f64::NAN)),
            })
            .collect(),
    );
    Ok(Output { record, table, table_in_json: false })
}

fn region_table(g: &icl_core::grid::RegionGrid) -> Table {
    let mut t = Table::with_columns(vec![g.x_name.clone(), g.y_name.clone(), "accept".into()]);
    for (i, &x) in g.xs.iter().enumerate() {
        for (j, &y) in g.ys.iter().enumerate() {
            t.push(vec![Cell::F(x), Cell::F(y), Cell::B(g.at(i, j))]);
        }
    }
    t
}

fn solve_hetero(p: &HeteroParams) -> Res {
    let spec = BiasClassSpec::new(p.biases.clone(), p.shares.clone(), p.var, p.r)?;
    let m = spec.m();
    let mode = hetero_mode(m);
    let sol = hetero::solve(&spec, HeteroOptions { mode, ..HeteroOptions::default() })?;
    let table = if m == 2 {
        let bd = (-p.region.bound, p.region.bound);
        region_table(&hetero::region_grid(&sol.mechanism, [bd, bd], p.region.resolution)?)
    } else {
        Table::new(&["omega1", "omega2", "accept"])
    };
    let e = &sol.evaluation;
    let record = json!({
        "biases": p.biases,
        "shares": p.shares,
        "eta": p.var,
        "r": p.r,
        "lambda": sol.mechanism.lambda,
        "zeta": sol.mechanism.zeta,
        "residuals": e.residuals,
        "monotonicity_values": e.monotonicity_values,
        "value_receiver": e.value_receiver,
        "accept_probability": e.accept_probability,
        "starts_tried": sol.starts_tried,
        "expectation": format!("{mode:?}"),
    });
    Ok(Output { record, table, table_in_json: false })
}

fn solve_linear(p: &LinearParams) -> Res {
    let spec = LinearPayoffSpec::new(p.probs.clone(), p.t_s.clone(), p.t_r.clone())?;
    let sol = linear::solve(&spec, NewtonOptions::default())?;
    let bd = (-p.region.bound, p.region.bound);
    let table = region_table(&linear::region_grid(&sol.mechanism, &spec, [bd, bd], p.region.resolution)?);
    let e = &sol.evaluation;
    let record = json!({
        "probs": p.probs,
        "t_s": p.t_s,
        "t_r": p.t_r,
        "gamma": spec.gamma,
        "lambda_r": sol.mechanism.lambda_r,
        "lambda_s": sol.mechanism.lambda_s,
        "zeta": sol.mechanism.zeta,
        "residuals": e.residuals,
        "monotonicity_terms": e.monotonicity_terms,
        "monotonicity_combinations": e.monotonicity_combinations,
        "value_receiver": e.value_receiver,
        "accept_probability": e.accept_probability,
        "ironing_required": sol.ironing_required,
    });
    Ok(Output { record, table, table_in_json: false })
}

fn simulate_path(p: &PathParams) -> Res {
    let d = dist(&p.grid)?;
    let path = simulate::brownian_path(&d, p.n, p.seed)?;
    let mut table = Table::new(&["t", "x"]);
    let nf = p.n as f64;
    for (i, x) in path.partial_sums.iter().enumerate() {
        table.push(vec![Cell::F(i as f64 / nf), Cell::F(*x)]);
    }
    let record = json!({ "n": p.n, "seed": p.seed, "nef": path.nef_curve, "partial_sums": path.partial_sums });
    Ok(Output { record, table, table_in_json: false })
}

fn simulate_gap(p: &GapParams) -> Res {
    let d = dist(&p.grid)?;
    let cfg = SimConfig { n: p.n, replications: p.replications, seed: p.seed, shards: p.shards };
    let (b, r) = (p.b, p.r);
    let report = match p.mechanism {
        MechKind::SenderPreferred => {
            simulate::estimate_ic_gap(|h| f64::from(u8::from(model::sender_preferred(h.omega(&d), b))), &d, b, cfg)?
        }
        MechKind::FirstBest => {
            simulate::estimate_ic_gap(|h| f64::from(u8::from(model::receiver_first_best(h.omega(&d), r))), &d, b, cfg)?
        }
        MechKind::Interval => {
            let mech = interval::solve_alpha(b, r, d.variance)?;
            simulate::estimate_ic_gap(|h| f64::from(u8::from(mech.accept(h.omega(&d)))), &d, b, cfg)?
        }
    };
    let mut table = Table::new(&["k", "l", "gap", "se"]);
    for g in &report.pairs {
        table.push(vec![Cell::I(g.k as i64 + 1), Cell::I(g.l as i64 + 1), Cell::F(g.gap), Cell::F(g.se)]);
    }
    let record = json!({
        "n": report.n,
        "replications": report.replications,
        "max_gap": report.max_gap,
        "perturbation_gain": simulate::perturbation_gain(b, p.n),
    });
    Ok(Output { record, table, table_in_json: true })
}

fn simulate_convergence(p: &ConvergenceParams) -> Res {
    let d = dist(&p.grid)?;
    let prefs = Preferences::new(p.b, p.r)?;
    let rows = simulate::convergence_study(&d, prefs, &p.ns, lp_opts(p.profile_cap))?;
    let mut table = Table::new(&["n", "distance", "l1_distance", "lp_value", "interval_value", "skipped"]);
    for row in &rows {
        table.push(vec![
            Cell::I(row.n as i64),
            Cell::F(row.distance),
            Cell::F(row.l1_distance),
            Cell::F(row.lp_value),
            Cell::F(row.interval_value),
            Cell::S(row.skipped.clone().unwrap_or_default()),
        ]);
    }
    Ok(Output { record: json!({ "b": p.b, "r": p.r }), table, table_in_json: true })
}

fn sweep_finite(p: &SweepFiniteParams) -> Res {
    let mut table =
        Table::new(&["b", "lp_value", "sender_preferred_value", "gain", "relative_gain", "ic_gap", "n_lower"]);
    for b in icl_core::grid::linspace(p.b_min, p.b_max, p.steps) {
        let fp = FiniteParams { b, r: p.r, n: p.n, grid: p.grid.clone(), profile_cap: p.profile_cap };
        let (_, sol, sp) = finite_solution(&fp)?;
        let lp = sol.report.objective;
        let gain = lp - sp;
        let nl = model::n_lower_bound(b, p.r, 0.0, 1.0).unwrap_or(f64::NAN);
        table.push(vec![
            Cell::F(b),
            Cell::F(lp),
            Cell::F(sp),
            Cell::F(gain),
            Cell::F(gain / sp.abs().max(1e-300)),
            Cell::F(sol.report.ic_gap),
            Cell::F(nl),
        ]);
    }
    Ok(Output { record: json!({ "r": p.r, "n": p.n }), table, table_in_json: true })
}

fn sweep_interval(p: &SweepIntervalParams) -> Res {
    let names = ["b", "alpha", "omega_lo", "omega_hi", "value_receiver", "value_sender", "degenerate"];
    let mut table = Table::new(&names);
    for b in icl_core::grid::linspace(p.b_min, p.b_max, p.steps) {
        let (_, rec) = interval_record(&IntervalParams { b, r: p.r, var: p.var })?;
        table.push(
            names
                .iter()
                .map(|n| match &rec[*n] {
                    Value::Bool(x) => Cell::B(*x),
                    v => Cell::F(v.as_f64().unwrap_or(f64::NAN)),
                })
                .collect(),
        );
    }
    Ok(Output { record: json!({ "r": p.r, "V": p.var }), table, table_in_json: true })
}

/// `(b - r, N_lower)` for a non-negative and a negative receiver threshold.
fn bound_curve(p: &BoundCurveParams) -> Res {
    let mut table = Table::new(&["branch", "r", "b_minus_r", "n_lower"]);
    for (branch, r) in [("r_nonnegative", p.r), ("r_negative", -p.r)] {
        for gap in icl_core::grid::linspace(p.b_max / p.steps as f64, p.b_max, p.steps) {
            if let Ok(nl) = model::n_lower_bound(r + gap, r, 0.0, 1.0) {
                table.push(vec![Cell::S(branch.into()), Cell::F(r), Cell::F(gap), Cell::F(nl)]);
            }
        }
    }
    Ok(Output { record: json!({ "ell": 0.0, "s_bar": 1.0 }), table, table_in_json: true })
}

fn figure(fig: u8, spec: &Params, region: Option<&RegionParams>) -> Res {
    match (fig, spec) {
        (1, Params::SolveInterval(p)) => {
            let reg = region.ok_or_else(|| CliError::Config("figure 1 needs a region".into()))?;
            let (mech, record) = interval_record(p)?;
            let mut table = Table::new(&["omega", "accept"]);
            for w in icl_core::grid::linspace(-reg.bound, reg.bound, reg.resolution) {
                table.push(vec![Cell::F(w), Cell::B(mech.accept(w))]);
            }
            Ok(Output { record, table, table_in_json: true })
        }
        (7, Params::SolveFinite(p)) => {
            let (d, sol, sp) = finite_solution(p)?;
            let k = d.k();
            let mut table = Table::new(&["s1", "s2", "sigma"]);
            let mut counts = vec![0u32; k];
            for i in 0..k {
                for j in 0..k {
                    counts.iter_mut().for_each(|c| *c = 0);
                    counts[i] += 1;
                    counts[j] += 1;
                    let idx = sol.table.find(&counts).ok_or_else(|| CliError::Record("profile missing".into()))?;
                    table.push(vec![Cell::F(d.t[i]), Cell::F(d.t[j]), Cell::F(sol.mechanism.sigma[idx])]);
                }
            }
            let record = json!({
                "b": p.b,
                "objective": sol.report.objective,
                "sender_preferred_value": sp,
                "ic_gap": sol.report.ic_gap,
            });
            Ok(Output { record, table, table_in_json: true })
        }
        (_, inner) => {
            let mut out = dispatch(inner)?;
            out.table_in_json = true;
            Ok(out)
        }
    }
}

//! Raw configuration (flags merged over an optional JSON file) and its
//! per-command resolution into validated parameters.

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SolveFinite,
    SolveInterval,
    SolveHetbias,
    SolveLinear,
    Simulate,
    Sweep,
    Figures,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveFinite => "solve-finite",
            Command::SolveInterval => "solve-interval",
            Command::SolveHetbias => "solve-hetbias",
            Command::SolveLinear => "solve-linear",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Figures => "figures",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SimKind {
    Path,
    Gap,
    Convergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MechKind {
    SenderPreferred,
    FirstBest,
    Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Finite,
    Interval,
}

/// Every settable field. Flags and the config file share these names.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Parser)]
#[serde(deny_unknown_fields)]
#[command(name = "icl", version, about = "Receiver-optimal aggregation mechanisms: solvers and experiments")]
pub struct RawConfig {
    #[arg(value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,

    /// JSON config file; flags override its values.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<String>,

    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// State variance V (eta for bias classes).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub var: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_k: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_hi: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<u32>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shards: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_cap: Option<usize>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimKind>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mechanism: Option<MechKind>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fig: Option<u8>,

    /// Region grid points per axis.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    /// Half-width of the square region plotted.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub biases: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shares: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_s: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_r: Option<Vec<f64>>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl RawConfig {
    /// Values present in `top` replace those in `self`.
    pub fn overlay(mut self, top: &RawConfig) -> RawConfig {
        overlay!(self, top; command, b, r, var, grid_k, grid_lo, grid_hi, n, ns, seed, replications,
            shards, profile_cap, sim, mechanism, sweep, b_min, b_max, steps, fig, resolution, bound,
            biases, shares, probs, t_s, t_r, out, format);
        self
    }

    pub fn from_json(text: &str) -> Result<RawConfig, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config file: {e}")))
    }

    /// Load `--config` (if any) and apply the flags on top.
    pub fn merged(flags: RawConfig) -> Result<RawConfig, CliError> {
        match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Io { path: path.clone(), message: e.to_string() })?;
                Ok(RawConfig::from_json(&text)?.overlay(&flags))
            }
            None => Ok(flags),
        }
    }

    fn present(&self) -> Vec<String> {
        match serde_json::to_value(self) {
            Ok(serde_json::Value::Object(m)) => m.keys().cloned().collect(),
            _ => vec![],
        }
    }
}

/// Parameters actually used by one command, after defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Params {
    SolveFinite(FiniteParams),
    SolveInterval(IntervalParams),
    SolveHetbias(HeteroParams),
    SolveLinear(LinearParams),
    SimulatePath(PathParams),
    SimulateGap(GapParams),
    SimulateConvergence(ConvergenceParams),
    SweepFinite(SweepFiniteParams),
    SweepInterval(SweepIntervalParams),
    BoundCurve(BoundCurveParams),
    Figure {
        fig: u8,
        spec: Box<Params>,
        #[serde(skip_serializing_if = "Option::is_none")]
        region: Option<RegionParams>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub grid_k: usize,
    pub grid_lo: f64,
    pub grid_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteParams {
    pub b: f64,
    pub r: f64,
    pub n: u32,
    pub grid: GridParams,
    pub profile_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalParams {
    pub b: f64,
    pub r: f64,
    pub var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    pub resolution: usize,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroParams {
    pub biases: Vec<f64>,
    pub shares: Vec<f64>,
    pub var: f64,
    pub r: f64,
    pub region: RegionParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub probs: Vec<f64>,
    pub t_s: Vec<f64>,
    pub t_r: Vec<f64>,
    pub region: RegionParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub n: u32,
    pub seed: u64,
    pub grid: GridParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapParams {
    pub mechanism: MechKind,
    pub b: f64,
    pub r: f64,
    pub n: u32,
    pub seed: u64,
    pub replications: usize,
    pub shards: usize,
    pub grid: GridParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceParams {
    pub b: f64,
    pub r: f64,
    pub ns: Vec<u32>,
    pub grid: GridParams,
    pub profile_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFiniteParams {
    pub b_min: f64,
    pub b_max: f64,
    pub steps: usize,
    pub r: f64,
    pub n: u32,
    pub grid: GridParams,
    pub profile_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepIntervalParams {
    pub b_min: f64,
    pub b_max: f64,
    pub steps: usize,
    pub r: f64,
    pub var: f64,
}

/// Second-branch offset and curve density for the bound figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurveParams {
    pub r: f64,
    pub b_max: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub params: Params,
    pub output_path: Option<String>,
    pub format: Format,
}

impl ExperimentConfig {
    pub fn command(&self) -> &'static str {
        self.params.name()
    }

    /// SHA-256 of the canonical JSON of the semantic parameters.
    pub fn config_hash(&self) -> String {
        let text = serde_json::to_string(&self.params).expect("parameters serialize");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl Params {
    pub fn name(&self) -> &'static str {
        match self {
            Params::SolveFinite(_) => "solve-finite",
            Params::SolveInterval(_) => "solve-interval",
            Params::SolveHetbias(_) => "solve-hetbias",
            Params::SolveLinear(_) => "solve-linear",
            Params::SimulatePath(_) | Params::SimulateGap(_) | Params::SimulateConvergence(_) => "simulate",
            Params::SweepFinite(_) | Params::SweepInterval(_) => "sweep",
            Params::BoundCurve(_) | Params::Figure { .. } => "figures",
        }
    }
}

fn reject_unused(raw: &RawConfig, allowed: &[&str], what: &str) -> Result<(), CliError> {
    let always = ["command", "out", "format"];
    for key in raw.present() {
        if !allowed.contains(&key.as_str()) && !always.contains(&key.as_str()) {
            return Err(CliError::Config(format!("field `{key}` is not used by {what}")));
        }
    }
    Ok(())
}

fn need_positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("`{name}` must be positive and finite, got {v}")))
    }
}

fn need_finite(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("`{name}` must be finite, got {v}")))
    }
}

fn need_prefs(b: f64, r: f64) -> Result<(), CliError> {
    need_positive("b", b)?;
    need_finite("r", r)?;
    if r >= b {
        return Err(CliError::Config(format!("need r < b, got r = {r}, b = {b}")));
    }
    Ok(())
}

fn grid(raw: &RawConfig, default_k: usize) -> Result<GridParams, CliError> {
    let g = GridParams {
        grid_k: raw.grid_k.unwrap_or(default_k),
        grid_lo: raw.grid_lo.unwrap_or(-1.0),
        grid_hi: raw.grid_hi.unwrap_or(1.0),
    };
    if g.grid_k < 2 {
        return Err(CliError::Config("`grid_k` must be at least 2".into()));
    }
    if !(g.grid_lo < g.grid_hi) || !g.grid_lo.is_finite() || !g.grid_hi.is_finite() {
        return Err(CliError::Config("need finite grid_lo < grid_hi".into()));
    }
    Ok(g)
}

fn region(raw: &RawConfig, default_res: usize, default_bound: f64) -> Result<RegionParams, CliError> {
    let p = RegionParams {
        resolution: raw.resolution.unwrap_or(default_res),
        bound: raw.bound.unwrap_or(default_bound),
    };
    if p.resolution < 2 {
        return Err(CliError::Config("`resolution` must be at least 2".into()));
    }
    need_positive("bound", p.bound)?;
    Ok(p)
}

const GRID_KEYS: [&str; 3] = ["grid_k", "grid_lo", "grid_hi"];
const DEFAULT_CAP: usize = icl_core::finite::DEFAULT_PROFILE_CAP;

fn keys(extra: &[&'static str], with_grid: bool) -> Vec<&'static str> {
    let mut v = extra.to_vec();
    if with_grid {
        v.extend(GRID_KEYS);
    }
    v
}

fn resolve_finite(raw: &RawConfig) -> Result<FiniteParams, CliError> {
    reject_unused(raw, &keys(&["b", "r", "n", "profile_cap"], true), "solve-finite")?;
    let p = FiniteParams {
        b: raw.b.unwrap_or(0.8),
        r: raw.r.unwrap_or(0.0),
        n: raw.n.unwrap_or(2),
        grid: grid(raw, 41)?,
        profile_cap: raw.profile_cap.unwrap_or(DEFAULT_CAP),
    };
    need_prefs(p.b, p.r)?;
    if p.n == 0 {
        return Err(CliError::Config("`n` must be at least 1".into()));
    }
    Ok(p)
}

fn resolve_interval(raw: &RawConfig) -> Result<IntervalParams, CliError> {
    reject_unused(raw, &["b", "r", "var"], "solve-interval")?;
    let p = IntervalParams { b: raw.b.unwrap_or(1.0), r: raw.r.unwrap_or(0.0), var: raw.var.unwrap_or(1.0) };
    need_prefs(p.b, p.r)?;
    need_positive("var", p.var)?;
    Ok(p)
}

fn resolve_hetero(raw: &RawConfig) -> Result<HeteroParams, CliError> {
    reject_unused(raw, &["biases", "shares", "var", "r", "resolution", "bound"], "solve-hetbias")?;
    let p = HeteroParams {
        biases: raw.biases.clone().unwrap_or_else(|| vec![0.1, 0.3]),
        shares: raw.shares.clone().unwrap_or_else(|| vec![0.5, 0.5]),
        var: raw.var.unwrap_or(1.0),
        r: raw.r.unwrap_or(0.0),
        region: region(raw, 201, 4.0)?,
    };
    if p.biases.len() != p.shares.len() || p.biases.is_empty() {
        return Err(CliError::Config("`biases` and `shares` need equal, positive length".into()));
    }
    need_positive("var", p.var)?;
    Ok(p)
}

fn resolve_linear(raw: &RawConfig) -> Result<LinearParams, CliError> {
    reject_unused(raw, &["probs", "t_s", "t_r", "resolution", "bound"], "solve-linear")?;
    let ex = icl_core::linear::three_type_example();
    let given = [raw.probs.is_some(), raw.t_s.is_some(), raw.t_r.is_some()];
    if given.iter().any(|&g| g) && !given.iter().all(|&g| g) {
        return Err(CliError::Config("`probs`, `t_s` and `t_r` must be given together".into()));
    }
    Ok(LinearParams {
        probs: raw.probs.clone().unwrap_or(ex.f),
        t_s: raw.t_s.clone().unwrap_or(ex.t_s),
        t_r: raw.t_r.clone().unwrap_or(ex.t_r),
        region: region(raw, 201, 4.0)?,
    })
}

fn resolve_simulate(raw: &RawConfig) -> Result<Params, CliError> {
    match raw.sim.unwrap_or(SimKind::Gap) {
        SimKind::Path => {
            reject_unused(raw, &keys(&["sim", "n", "seed"], true), "simulate --sim path")?;
            let p = PathParams { n: raw.n.unwrap_or(1000), seed: raw.seed.unwrap_or(1), grid: grid(raw, 21)? };
            if p.n == 0 {
                return Err(CliError::Config("`n` must be at least 1".into()));
            }
            Ok(Params::SimulatePath(p))
        }
        SimKind::Gap => {
            let allowed = keys(&["sim", "mechanism", "b", "r", "n", "seed", "replications", "shards"], true);
            reject_unused(raw, &allowed, "simulate --sim gap")?;
            let p = GapParams {
                mechanism: raw.mechanism.unwrap_or(MechKind::Interval),
                b: raw.b.unwrap_or(1.0),
                r: raw.r.unwrap_or(0.0),
                n: raw.n.unwrap_or(100),
                seed: raw.seed.unwrap_or(1),
                replications: raw.replications.unwrap_or(100_000),
                shards: raw.shards.unwrap_or(8),
                grid: grid(raw, 11)?,
            };
            need_prefs(p.b, p.r)?;
            if p.n == 0 || p.replications == 0 || p.shards == 0 {
                return Err(CliError::Config("`n`, `replications` and `shards` must be positive".into()));
            }
            Ok(Params::SimulateGap(p))
        }
        SimKind::Convergence => {
            reject_unused(raw, &keys(&["sim", "b", "r", "ns", "profile_cap"], true), "simulate --sim convergence")?;
            let p = ConvergenceParams {
                b: raw.b.unwrap_or(1.0),
                r: raw.r.unwrap_or(0.0),
                ns: raw.ns.clone().unwrap_or_else(|| vec![4, 8, 16]),
                grid: grid(raw, 3)?,
                profile_cap: raw.profile_cap.unwrap_or(DEFAULT_CAP),
            };
            need_prefs(p.b, p.r)?;
            if p.ns.is_empty() || p.ns.contains(&0) {
                return Err(CliError::Config("`ns` must be a non-empty list of positive counts".into()));
            }
            Ok(Params::SimulateConvergence(p))
        }
    }
}

fn sweep_range(raw: &RawConfig, lo: f64, hi: f64, steps: usize) -> Result<(f64, f64, usize), CliError> {
    let (a, z, s) = (raw.b_min.unwrap_or(lo), raw.b_max.unwrap_or(hi), raw.steps.unwrap_or(steps));
    need_positive("b_min", a)?;
    if !(z >= a) || !z.is_finite() {
        return Err(CliError::Config("need b_min <= b_max".into()));
    }
    Ok((a, z, s))
}

fn resolve_sweep(raw: &RawConfig) -> Result<Params, CliError> {
    match raw.sweep.unwrap_or(SweepKind::Finite) {
        SweepKind::Finite => {
            let allowed = keys(&["sweep", "b_min", "b_max", "steps", "r", "n", "profile_cap"], true);
            reject_unused(raw, &allowed, "sweep --sweep finite")?;
            let (b_min, b_max, steps) = sweep_range(raw, 0.05, 1.0, 20)?;
            let p = SweepFiniteParams {
                b_min,
                b_max,
                steps,
                r: raw.r.unwrap_or(0.0),
                n: raw.n.unwrap_or(2),
                grid: grid(raw, 21)?,
                profile_cap: raw.profile_cap.unwrap_or(DEFAULT_CAP),
            };
            need_prefs(p.b_min, p.r)?;
            Ok(Params::SweepFinite(p))
        }
        SweepKind::Interval => {
            reject_unused(raw, &["sweep", "b_min", "b_max", "steps", "r", "var"], "sweep --sweep interval")?;
            let (b_min, b_max, steps) = sweep_range(raw, 0.05, 2.0, 40)?;
            let p = SweepIntervalParams { b_min, b_max, steps, r: raw.r.unwrap_or(0.0), var: raw.var.unwrap_or(1.0) };
            need_prefs(p.b_min, p.r)?;
            need_positive("var", p.var)?;
            Ok(Params::SweepInterval(p))
        }
    }
}

fn resolve_figure(raw: &RawConfig) -> Result<Params, CliError> {
    let fig = raw.fig.ok_or_else(|| CliError::Config("figures needs `fig` (1, 2, 3, 4, 6 or 7)".into()))?;
    let mut inner = raw.clone();
    inner.fig = None;
    let spec = match fig {
        1 => {
            reject_unused(&inner, &["b", "r", "var", "resolution", "bound"], "figure 1")?;
            let reg = region(&inner, 801, 4.0)?;
            let p = IntervalParams {
                b: inner.b.unwrap_or(1.0),
                r: inner.r.unwrap_or(0.0),
                var: inner.var.unwrap_or(1.0),
            };
            need_prefs(p.b, p.r)?;
            need_positive("var", p.var)?;
            return Ok(Params::Figure { fig, spec: Box::new(Params::SolveInterval(p)), region: Some(reg) });
        }
        2 => {
            inner.sim = Some(SimKind::Path);
            Params::SimulatePath(match resolve_simulate(&inner)? {
                Params::SimulatePath(p) => p,
                _ => unreachable!("path kind requested"),
            })
        }
        3 => {
            inner.resolution = inner.resolution.or(Some(401));
            Params::SolveHetbias(resolve_hetero(&inner)?)
        }
        4 => {
            inner.resolution = inner.resolution.or(Some(401));
            Params::SolveLinear(resolve_linear(&inner)?)
        }
        6 => {
            reject_unused(&inner, &["r", "b_max", "steps"], "figure 6")?;
            let p = BoundCurveParams {
                r: inner.r.map(f64::abs).unwrap_or(0.1),
                b_max: inner.b_max.unwrap_or(1.0),
                steps: inner.steps.unwrap_or(200),
            };
            need_positive("b_max", p.b_max)?;
            Params::BoundCurve(p)
        }
        7 => {
            inner.b = inner.b.or(Some(0.6 * std::f64::consts::SQRT_2));
            inner.grid_k = inner.grid_k.or(Some(200));
            inner.n = inner.n.or(Some(2));
            let p = resolve_finite(&inner)?;
            if p.n != 2 {
                return Err(CliError::Config("figure 7 is a two-sender grid; `n` must be 2".into()));
            }
            Params::SolveFinite(p)
        }
        other => return Err(CliError::Config(format!("unknown figure {other}; choose 1, 2, 3, 4, 6 or 7"))),
    };
    Ok(Params::Figure { fig, spec: Box::new(spec), region: None })
}

pub fn resolve(raw: &RawConfig) -> Result<ExperimentConfig, CliError> {
    let command = raw.command.ok_or_else(|| CliError::Config("no command given".into()))?;
    let params = match command {
        Command::SolveFinite => Params::SolveFinite(resolve_finite(raw)?),
        Command::SolveInterval => Params::SolveInterval(resolve_interval(raw)?),
        Command::SolveHetbias => Params::SolveHetbias(resolve_hetero(raw)?),
        Command::SolveLinear => Params::SolveLinear(resolve_linear(raw)?),
        Command::Simulate => resolve_simulate(raw)?,
        Command::Sweep => resolve_sweep(raw)?,
        Command::Figures => resolve_figure(raw)?,
    };
    let default_format = match &params {
        Params::SolveInterval(_) | Params::SolveHetbias(_) | Params::SolveLinear(_) => Format::Json,
        _ => Format::Csv,
    };
    Ok(ExperimentConfig { params, output_path: raw.out.clone(), format: raw.format.unwrap_or(default_format) })
}

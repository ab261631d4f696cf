//! Re-check a saved JSON solution record without re-solving.

use icl_core::hetero::{self, BiasClassSpec, QuadraticMechanism};
use icl_core::interval;
use icl_core::linear::{self, LinearPayoffSpec, LinearPrefMechanism};
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::error::CliError;
use crate::run::hetero_mode;

#[derive(Debug, Clone, PartialEq)]
pub struct Recertification {
    pub command: String,
    /// Residuals stored in the record.
    pub stored: Vec<f64>,
    /// The same residuals recomputed from the stored mechanism.
    pub recomputed: Vec<f64>,
}

impl Recertification {
    pub fn max_discrepancy(&self) -> f64 {
        self.stored.iter().zip(&self.recomputed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

fn field<T: DeserializeOwned>(v: &Value, key: &str) -> Result<T, CliError> {
    serde_json::from_value(v.get(key).cloned().ok_or_else(|| CliError::Record(format!("missing `{key}`")))?)
        .map_err(|e| CliError::Record(format!("`{key}`: {e}")))
}

pub fn recertify(text: &str) -> Result<Recertification, CliError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| CliError::Record(e.to_string()))?;
    let command: String = field(&doc["header"], "command")?;
    let res = &doc["result"];
    let (stored, recomputed) = match command.as_str() {
        "solve-interval" => {
            let (b, r, v): (f64, f64, f64) = (field(res, "b")?, field(res, "r")?, field(res, "V")?);
            let alpha: f64 = field(res, "alpha")?;
            let degenerate: bool = field(res, "degenerate")?;
            let stored = vec![field(res, "aggregate_residual")?, field(res, "omega_lo")?, field(res, "omega_hi")?];
            let recomputed = if degenerate {
                vec![0.0, 0.0, 0.0]
            } else {
                let (lo, hi) = interval::cutoffs_from_alpha(alpha, b, r, v)?;
                vec![interval::aggregate_icl_residual(alpha, b, r, v)?, lo, hi]
            };
            (stored, recomputed)
        }
        "solve-hetbias" => {
            let spec = BiasClassSpec::new(field(res, "biases")?, field(res, "shares")?, field(res, "eta")?, field(res, "r")?)?;
            let mode = hetero_mode(spec.m());
            let mech = QuadraticMechanism::new(field(res, "lambda")?, field(res, "zeta")?, spec)?;
            (field(res, "residuals")?, hetero::moment_residuals(&mech, mode)?)
        }
        "solve-linear" => {
            let spec = LinearPayoffSpec::new(field(res, "probs")?, field(res, "t_s")?, field(res, "t_r")?)?;
            let mech =
                LinearPrefMechanism { lambda_r: field(res, "lambda_r")?, lambda_s: field(res, "lambda_s")?, zeta: field(res, "zeta")? };
            let stored: [f64; 2] = field(res, "residuals")?;
            (stored.to_vec(), linear::moment_residuals(&mech, &spec)?.to_vec())
        }
        "solve-finite" => {
            use icl_core::finite;
            use icl_core::model::make_uniform_grid;
            let dist = make_uniform_grid(field(res, "grid_k")?, field(res, "grid_lo")?, field(res, "grid_hi")?)?;
            let n: u32 = field(res, "n")?;
            let table = finite::enumerate_profiles(&dist, n, usize::MAX)?;
            let profiles: Vec<Vec<u32>> = field(res, "profiles")?;
            let sigma_in: Vec<f64> = field(res, "sigma")?;
            let mut sigma = vec![0.0; table.len()];
            for (counts, s) in profiles.iter().zip(&sigma_in) {
                let j = table.find(counts).ok_or_else(|| CliError::Record("unknown profile".into()))?;
                sigma[j] = *s;
            }
            let b: f64 = field(res, "b")?;
            (vec![field(res, "ic_gap")?], vec![finite::check_ic(&sigma, &table, &dist, b)?])
        }
        other => return Err(CliError::Record(format!("`{other}` records carry no certificate"))),
    };
    if stored.len() != recomputed.len() {
        return Err(CliError::Record("residual count mismatch".into()));
    }
    Ok(Recertification { command, stored, recomputed })
}

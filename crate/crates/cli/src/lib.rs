//! Command-line front end: configuration, experiment dispatch and output.

pub mod config;
pub mod emit;
pub mod error;
pub mod recertify;
pub mod run;

pub use config::{resolve, ExperimentConfig, RawConfig};
pub use error::CliError;

use clap::Parser;

/// Parse arguments, run, and write the artifact. Returns the rendered text.
pub fn main_with_args<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let flags = RawConfig::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    let raw = RawConfig::merged(flags)?;
    let cfg = resolve(&raw)?;
    let text = emit::render(&cfg, &run::execute(&cfg)?);
    if let Some(path) = &cfg.output_path {
        std::fs::write(path, &text).map_err(|e| CliError::Io { path: path.clone(), message: e.to_string() })?;
    }
    Ok(text)
}

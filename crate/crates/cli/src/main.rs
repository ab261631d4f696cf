use std::process::ExitCode;

use clap::Parser;
use icl_cli::{emit, resolve, run, CliError, RawConfig};

fn main() -> ExitCode {
    let flags = match RawConfig::try_parse() {
        Ok(f) => f,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => return fail(CliError::Config(e.to_string())),
    };
    match go(flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn go(flags: RawConfig) -> Result<(), CliError> {
    let cfg = resolve(&RawConfig::merged(flags)?)?;
    let text = emit::render(&cfg, &run::execute(&cfg)?);
    match &cfg.output_path {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io { path: path.clone(), message: e.to_string() }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(2)
}

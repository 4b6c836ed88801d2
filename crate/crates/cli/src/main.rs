//! `ami`: command-line front end for the misogyny identification pipeline.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use config::FileConfig;

#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Input data that parsed but cannot be used as given.
#[derive(Debug)]
pub struct DataError(pub String);

impl std::fmt::Display for DataError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

const USAGE: u8 = 1;
const DATA: u8 = 2;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return USAGE;
        }
        if let Some(e) = cause.downcast_ref::<ami_core::Error>() {
            return match e {
                ami_core::Error::InvalidInput(_) => USAGE,
                _ => DATA,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<DataError>() {
            return DATA;
        }
    }
    USAGE
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let cfg = match &cli.config {
        Some(p) => FileConfig::load(p).map_err(|e| UsageError(format!("{e:#}")))?,
        None => FileConfig::default(),
    };
    let threads = cli.threads.or(cfg.threads).unwrap_or(0);
    ami_core::pipeline::with_threads(threads, move || match cli.command {
        Command::Stats(a) => commands::stats(a, &cfg),
        Command::Featurize(a) => commands::featurize(a, &cfg),
        Command::Train(a) => commands::train(a, &cfg),
        Command::Predict(a) => commands::predict(a, &cfg),
        Command::Evaluate(a) => commands::evaluate(a, &cfg),
        Command::Run(a) => commands::run(a, &cfg),
    })?
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE),
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! Command-line pipeline for intraday aftershock analysis.
//!
//! Configuration comes from one flat key=value file plus repeatable `--set`
//! overrides; every subcommand writes its artifacts and a run manifest into
//! the configured output directory. Exit codes: 0 success, 2 usage or
//! configuration error, 3 data or dependency error, 4 fit or quadrature
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use aftershock_core::Error;
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod csvio;
mod figures;
mod manifest;
mod svg;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "aftershock",
    version,
    about = "Intraday aftershock pipeline: return ensembles, scaling calibration, \
             decay-law fits, and parameter-free predictions"
)]
struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable); overrides win over the
    /// file, e.g. --set sim_seed=7.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an intraday price CSV into a return ensemble.
    Ingest,
    /// Draw a synthetic return ensemble from the model.
    Simulate,
    /// Fit the scaling exponent and tail parameters to an ensemble.
    Calibrate,
    /// Count aftershocks per threshold and fit the decay law.
    Omori,
    /// Predict aftershock curves from calibrated parameters alone.
    Predict,
    /// Assemble figures and tables from previously written artifacts.
    Report,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Domain(_) => 2,
        Error::Parse { .. } | Error::Data(_) | Error::Io { .. } => 3,
        Error::Fit(_) | Error::Quadrature(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = RunConfig::load(cli.config.as_deref(), &cli.set).and_then(|cfg| {
        match cli.command {
            Command::Ingest => commands::ingest::run(&cfg),
            Command::Simulate => commands::simulate::run(&cfg),
            Command::Calibrate => commands::calibrate::run(&cfg),
            Command::Omori => commands::omori::run(&cfg),
            Command::Predict => commands::predict::run(&cfg),
            Command::Report => commands::report::run(&cfg),
        }
    });
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

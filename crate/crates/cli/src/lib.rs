//! Command-line front end: single computations, parameter sweeps and the
//! figure presets, written as CSV or JSON.

pub mod commands;
pub mod config;
pub mod presets;
pub mod table;

use std::fs::File;
use std::io::{self, BufWriter};

use clap::{Parser, Subcommand};

use config::RunConfig;
use table::Table;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] mimo_harq::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_SEARCH_BOUND: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use mimo_harq::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                E::Infeasible(_) | E::InfeasiblePower { .. } | E::NoRoot { .. } => EXIT_INFEASIBLE,
                E::SearchBound { .. } => EXIT_SEARCH_BOUND,
                _ => EXIT_USAGE,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mimo-harq",
    version,
    about = "Antenna dimensioning and outage analysis for MIMO links with incremental-redundancy HARQ"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimum antenna counts for an outage target.
    Dimension(RunConfig),
    /// Monte Carlo outage estimate.
    Simulate(RunConfig),
    /// Outage probability under the Gaussian approximation.
    Outage(RunConfig),
    /// Largest rate meeting the outage target.
    Rate(RunConfig),
    /// Normalized outage factor, closed form or simulated.
    Gamma(RunConfig),
    /// Figure presets or an explicit dimensioning grid.
    Sweep(RunConfig),
}

/// A command's table plus the first per-row failure, which sets the exit
/// code after the table is written.
#[derive(Debug, Default)]
pub struct Outcome {
    pub table: Table,
    pub failure: Option<CliError>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(0, CliError::exit_code)
    }
}

type Handler = fn(&RunConfig) -> Result<Outcome, CliError>;

pub fn run(command: Command) -> Result<(Outcome, RunConfig), CliError> {
    let (cfg, f): (RunConfig, Handler) = match command {
        Command::Dimension(c) => (c, commands::dimension),
        Command::Simulate(c) => (c, commands::simulate),
        Command::Outage(c) => (c, commands::outage),
        Command::Rate(c) => (c, commands::rate),
        Command::Gamma(c) => (c, commands::gamma),
        Command::Sweep(c) => (c, commands::sweep),
    };
    let cfg = cfg.resolve()?;
    let outcome = f(&cfg)?;
    Ok((outcome, cfg))
}

/// Runs a parsed command line, writes its table and returns the exit code.
pub fn execute(cli: Cli) -> i32 {
    let (outcome, cfg) = match run(cli.command) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let written = match &cfg.out {
        Some(path) => File::create(path)
            .map_err(CliError::from)
            .and_then(|f| outcome.table.write(cfg.format(), BufWriter::new(f))),
        None => outcome.table.write(cfg.format(), io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    if let Some(e) = &outcome.failure {
        eprintln!("error: {e}");
    }
    outcome.exit_code()
}

//! `lyalab`: run Lyapunov-exponent experiments from a config file.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure
//! (the report is still written when one exists), 4 I/O error.

mod commands;
mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lyalab::{emit_report, Format};

use crate::config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(lyalab::Error),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<lyalab::Error> for CliError {
    fn from(e: lyalab::Error) -> Self {
        match e {
            lyalab::Error::Io(io) => CliError::Io(io.to_string()),
            e if e.is_numeric() => CliError::Numeric(e),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lyalab",
    version,
    about = "Lyapunov exponents of random 2x2 matrix products"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML); all keys have defaults except the seed.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo estimate of λ±.
    Estimate,
    /// Stationary measure on the projective line, as weighted particles.
    Stationary,
    /// Oseledets-direction agreement between the cocycle and perturbations.
    Oseledets,
    /// Continuity sweep over perturbation sizes γ.
    Sweep,
    /// Support jitter: each atom replaced by a cluster within δ.
    Jitter,
    /// Hölder norms, swap check and exponents of the B_n construction.
    Holder,
    /// Finite-length exponents of the Kifer family.
    Kifer,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: lyalab::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lyalab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let seed = config.seed(cli.seed)?;
    let format = config.format(cli.format)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let outcome = commands::run(cli.command, &config, seed)?;
    let out = cli
        .out
        .or_else(|| config.output.clone().map(|p| config.base_dir.join(p)));
    write_report(&outcome.report, format, out)?;
    match outcome.failure {
        Some(e) => Err(CliError::Numeric(e)),
        None => Ok(()),
    }
}

fn write_report(
    report: &lyalab::Report,
    format: Format,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Io(e.to_string());
    match out {
        Some(path) => {
            let file = File::create(&path)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            emit_report(report, format, &mut w)?;
            w.flush().map_err(io_err)
        }
        None => {
            let mut w = io::stdout().lock();
            emit_report(report, format, &mut w)?;
            w.flush().map_err(io_err)
        }
    }
}

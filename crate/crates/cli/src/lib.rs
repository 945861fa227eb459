//! Batch front end: scenario files in, CSV tables and gnuplot scripts out.
//!
//! Exit codes: 0 success, 1 numerical failure (including a check exceeding
//! `--tol`), 2 configuration or IO error.

// `!(x > 0.0)` is how validation rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(orthoport::Error),
    /// A verification exceeded its tolerance.
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_input_error() => 2,
            CliError::Core(_) | CliError::Check(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<orthoport::Error> for CliError {
    fn from(e: orthoport::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(name = "orthoport", version, about = "Symmetry-adapted excitation states and TARC-optimal port placement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Port line impedance in ohms, overriding `ports.z0`.
    #[arg(long, global = true)]
    pub z0: Option<f64>,
    /// Pass threshold for orthogonality and residual checks.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Adapt delta-gap sources at `ports.positions` to every species.
    Adapt,
    /// Characteristic modes per species with orthogonality report.
    Modes,
    /// Port-placement scan at a single frequency.
    Scan,
    /// Port-placement scan scored over the whole frequency grid.
    Sweep,
    /// Best layouts for 1..=n_xi ports against the `[reference]` layout.
    Compare,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if !(cli.tol > 0.0) {
        return Err(CliError::Config(format!("--tol must be positive, got {}", cli.tol)));
    }
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let overrides = config::Overrides { out: cli.out.clone(), z0: cli.z0 };
    let scenario = config::load(path, &overrides)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    std::fs::create_dir_all(&scenario.out)?;
    pool.install(|| match cli.command {
        Command::Adapt => commands::adapt(&scenario, cli.tol),
        Command::Modes => commands::modes(&scenario, cli.tol),
        Command::Scan => commands::scan(&scenario),
        Command::Sweep => commands::sweep(&scenario),
        Command::Compare => commands::compare(&scenario),
    })
}

pub fn main_exit(cli: &Cli) -> ExitCode {
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("orthoport: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! Command-line front end: parameter sweeps, figure data, oracle
//! comparisons and plot scripts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::Path;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod output;

use config::{Command, DistanceKind, Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "bathent",
    version,
    about = "Entanglement of two oscillators in a common bath"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Subcommand)]
pub enum CommandArgs {
    /// Stationary E over (γ, Ω, T, r) → fig1.csv
    AsymptoticSweep,
    /// E(t) traces with asymptotes → fig2.csv
    TimeTrace,
    /// Critical distance d₀ or d₁ by bisection → critical.csv
    CriticalDistance {
        #[arg(long, value_enum)]
        kind: Option<DistanceKind>,
    },
    /// Initial slope and short-time expansion → short_time.csv
    ShortTimeCheck,
    /// Pipeline vs finite-bath oracle → deviation.csv
    OracleCompare,
    /// d₀ ∝ 1/Ω fits per temperature → slope_fit.csv
    SlopeFit,
}

impl CommandArgs {
    pub fn split(&self) -> (Command, Option<DistanceKind>) {
        match self {
            CommandArgs::AsymptoticSweep => (Command::AsymptoticSweep, None),
            CommandArgs::TimeTrace => (Command::TimeTrace, None),
            CommandArgs::CriticalDistance { kind } => (Command::CriticalDistance, *kind),
            CommandArgs::ShortTimeCheck => (Command::ShortTimeCheck, None),
            CommandArgs::OracleCompare => (Command::OracleCompare, None),
            CommandArgs::SlopeFit => (Command::SlopeFit, None),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Numerical(#[from] bathent_core::Error),
    #[error(
        "oracle disagreement: max |ΔC| = {max_dc:e} (limit {limit_dc:e}), max |ΔE| = {max_de:e} (limit {limit_de:e})"
    )]
    OracleDisagreement {
        max_dc: f64,
        max_de: f64,
        limit_dc: f64,
        limit_de: f64,
    },
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    /// 2 configuration, 3 numerical tolerance, 4 oracle disagreement.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numerical(bathent_core::Error::InvalidParameter { .. }) => 2,
            CliError::Numerical(_) => 3,
            CliError::OracleDisagreement { .. } => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Numerical(bathent_core::Error::InvalidParameter { .. }) => "invalid-parameter",
            CliError::Numerical(_) => "numerical",
            CliError::OracleDisagreement { .. } => "oracle-disagreement",
        }
    }

    /// One machine-readable line for stderr.
    pub fn structured_line(&self) -> String {
        format!(
            "bathent: error kind={} code={} message=\"{}\"",
            self.kind(),
            self.exit_code(),
            self.to_string().replace('"', "'")
        )
    }
}

/// Resolves the configuration, runs the command on a pool of `jobs`
/// threads and writes the MANIFEST whether or not the run succeeded.
pub fn run(cli: &Cli) -> Result<RunConfig, CliError> {
    let (command, kind) = cli.command.split();
    let cfg = RunConfig::resolve(command, kind, &cli.overrides)?;
    run_config(&cfg)?;
    Ok(cfg)
}

pub fn run_config(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::io(&cfg.output_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", cfg.jobs)))?;
    let mut manifest = output::Manifest::default();
    let result = pool.install(|| commands::dispatch(cfg, &mut manifest));
    manifest.write(cfg, result.as_ref().err())?;
    result
}

//! Batch front-end: JSON configuration in, JSON/CSV results and gnuplot
//! companion scripts out.
//!
//! Exit codes: 0 success, 1 configuration error, 2 non-convergence,
//! 3 verification failures.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("{0} verification check(s) failed")]
    Verification(usize),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 1,
            CliError::NotConverged(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

/// Core errors raised while computing: numerical breakdowns count as
/// non-convergence, everything else is a problem with the configuration.
pub(crate) fn core_error(e: nehari_core::Error) -> CliError {
    use nehari_core::Error::*;
    match e {
        NonFinite(_) | DivergingFiber { .. } => CliError::NotConverged(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nehari",
    version,
    about = "Ground states of the discrete p-Laplacian equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for multi-start runs and sweeps.
    #[arg(long, env = "NEHARI_THREADS", global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ground state: result.json, u.csv, trace.csv.
    Solve(RunArgs),
    /// Sobolev constant by two routes: sobolev.json, extremal.csv.
    Sobolev(RunArgs),
    /// Fibering profile t ↦ Φ(tu): fiber.csv, fiber.json.
    Fiber(RunArgs),
    /// Geometrically distinct solutions on a torus: orbits.json, orbit_<k>.csv.
    Distinct(RunArgs),
    /// Property suite: verify.json, verify.txt.
    Verify(RunArgs),
    /// Parameter sweep: sweep.csv.
    Sweep(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub override_hypotheses: bool,
}

/// What a successful (or non-converged but written) run reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub message: String,
}

pub fn run(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Solve(a) => commands::solve(&commands::Context::new(a)?),
        Command::Sobolev(a) => commands::sobolev(&commands::Context::new(a)?),
        Command::Fiber(a) => commands::fiber(&commands::Context::new(a)?),
        Command::Distinct(a) => commands::distinct(&commands::Context::new(a)?),
        Command::Verify(a) => commands::verify(&commands::Context::new(a)?),
        Command::Sweep(a) => commands::sweep(&commands::Context::new(a)?),
    }
}

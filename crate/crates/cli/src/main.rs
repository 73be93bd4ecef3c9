//! `skorohod`: solve, certify and simulate problems described in TOML files.
//!
//! Exit codes: 0 success, 1 certificate failure, 2 usage or parse error,
//! 3 solver error. Thread count follows `RAYON_NUM_THREADS`.

mod commands;
mod problem;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn certificate(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    pub fn solver(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<skorohod_core::Error> for Failure {
    fn from(e: skorohod_core::Error) -> Self {
        Failure::solver(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "skorohod", version, about = "Generalized Skorohod problems: solve, certify, simulate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the deterministic problem; writes the solution CSV and prints its certificate.
    Solve {
        problem: PathBuf,
        /// Solution CSV (default: `<problem stem>.solution.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        /// Residual tolerance of the variational check.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Re-check an existing solution CSV against the problem.
    Certify {
        problem: PathBuf,
        solution: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Certificate JSON (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One reflected SDE path.
    Simulate {
        problem: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Path CSV; not written unless given.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Monte Carlo report over independent paths.
    Mc {
        problem: PathBuf,
        #[arg(long, default_value_t = 100)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        steps: Option<usize>,
        /// Report JSON (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory receiving one CSV per path.
        #[arg(long)]
        path_csv: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Self-convergence rates over step counts.
    Converge {
        problem: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        steps: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sampling verifiers for the exterior-ball, semiconvexity and drop conditions.
    CheckDomain {
        problem: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Largest accepted violation.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Solve { problem, out, steps, tol } => commands::solve(&problem, out, steps, tol),
        Command::Certify { problem, solution, steps, tol, out } => {
            commands::certify(&problem, &solution, steps, tol, out)
        }
        Command::Simulate { problem, seed, steps, out, tol } => commands::simulate(&problem, seed, steps, out, tol),
        Command::Mc { problem, paths, seed, steps, out, path_csv, tol } => {
            commands::monte_carlo(&problem, paths, seed, steps, out, path_csv, tol)
        }
        Command::Converge { problem, steps, out } => commands::converge(&problem, &steps, out),
        Command::CheckDomain { problem, seed, tol, out } => commands::check_domain(&problem, seed, tol, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("skorohod: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

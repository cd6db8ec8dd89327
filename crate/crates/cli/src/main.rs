//! `delay-lyap`: H2 norms, delay Lyapunov matrices, characteristic roots and
//! convergence studies for linear systems with discrete delays.
//!
//! Exit codes: 0 success, 1 other failure, 2 bad input (manifest, flags or
//! example name), 3 stability certificate failed, 4 residual tolerance not
//! met within the iteration budget.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use delay_lyap::Error;
use delay_lyap::lyap::{DEFAULT_MAX_K, DEFAULT_RESIDUAL_TOL};

#[derive(Parser, Debug)]
#[command(name = "delay-lyap", version, about = "Krylov approximation of delay Lyapunov matrices and H2 norms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Input {
    /// System manifest (TOML).
    #[arg(required_unless_present = "example", conflicts_with = "example")]
    pub manifest: Option<PathBuf>,
    /// Built-in system: didactic, didactic2, heat-exchanger, pde1, pde2.
    #[arg(long)]
    pub example: Option<String>,
    /// Grid size of the pde examples.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct Solve {
    /// Fixed projection size; the Arnoldi iteration runs 2k steps.
    #[arg(long, conflicts_with = "tol")]
    pub k: Option<usize>,
    /// Relative residual tolerance of the adaptive mode.
    #[arg(long, default_value_t = DEFAULT_RESIDUAL_TOL)]
    pub tol: f64,
    /// Largest projection size tried in adaptive mode.
    #[arg(long, default_value_t = DEFAULT_MAX_K)]
    pub max_k: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dense discretization against the quadrature oracle.
    #[value(name = "N")]
    N,
    /// Krylov approximation against a larger-k self reference.
    #[value(name = "k")]
    K,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the H2 norm as a JSON report.
    H2 {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solve: Solve,
    },
    /// Write P(t) on a uniform time grid as CSV.
    Lyap {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solve: Solve,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 101)]
        samples: usize,
        /// CSV destination; standard output when absent (the report then
        /// goes to standard error).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rightmost characteristic root estimates and the stability
    /// certificate.
    Roots {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 30)]
        k: usize,
        #[arg(long, default_value_t = 6)]
        count: usize,
    },
    /// Error against a reference as a function of N or k, as CSV with a
    /// fitted log-log slope in the footer.
    Convergence {
        #[arg(long)]
        example: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<usize>,
        /// Defaults to 2 for mode N and 50 for mode k.
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        /// Reference size for mode k; defaults to 1.5 times the largest
        /// grid value.
        #[arg(long)]
        k_ref: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a built-in example as a manifest (sparse matrices go to Matrix
    /// Market files next to it).
    Generate {
        #[arg(long)]
        example: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit a gnuplot script for a CSV written by `lyap` or `convergence`.
    Gnuplot {
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::InvalidSystem(_) | Error::InvalidArgument { .. } => 2,
            Error::ProjectedUnstable { .. } | Error::NotHurwitz { .. } => 3,
            Error::BudgetExhausted { .. } => 4,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::H2 { input, solve } => commands::h2(&input, &solve),
        Command::Lyap { input, solve, t_max, samples, out } => commands::lyap(&input, &solve, t_max, samples, out.as_deref()),
        Command::Roots { input, k, count } => commands::roots(&input, k, count),
        Command::Convergence { example, n, mode, grid, t_max, samples, k_ref, out } => {
            commands::convergence(&example, n, mode, &grid, t_max, samples, k_ref, out.as_deref())
        }
        Command::Generate { example, n, out } => commands::generate(&example, n, &out),
        Command::Gnuplot { csv, out } => commands::gnuplot(&csv, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

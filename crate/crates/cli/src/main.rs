//! `bvtp <command> <problem-file> [options]`
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure; `verify`
//! exits with `2 + failed checks` (capped at 125) when any check fails.

mod commands;
mod output;
mod rhs;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Format;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{failed} verification check(s) failed")]
    Verification { failed: usize },
}

impl From<bvtp_core::Error> for CliError {
    fn from(e: bvtp_core::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("output: {e}"))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Verification { failed } => (2 + failed).min(125) as u8,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "bvtp", version, about = "Spectral solver for Sturm-Liouville problems with transmission conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Problem definition file (TOML).
    pub problem: PathBuf,
    /// Write data here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Integrator and root tolerance.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Suppress progress messages.
    #[arg(long, short)]
    pub quiet: bool,
}

impl Common {
    pub fn progress(&self, msg: &str) {
        if !self.quiet {
            eprintln!("bvtp: {msg}");
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the problem data and print kappa, theta minors and weights.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Sample the characteristic function along a line in the lambda plane.
    Charfn {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true, required = true)]
        window: Vec<f64>,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        /// Constant imaginary part of the sampled lambda.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        imag: f64,
    },
    /// Eigenvalues in a window, or the lowest `--count` eigenvalues.
    Eigs {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true, conflicts_with = "count")]
        window: Option<Vec<f64>>,
        #[arg(long, default_value_t = 400)]
        grid: usize,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Normalized eigenfunction sampled on every piece.
    Eigenfunction {
        #[command(flatten)]
        common: Common,
        /// 1-based position in the ordered spectrum.
        #[arg(long, conflicts_with = "lambda", required_unless_present = "lambda")]
        index: Option<usize>,
        /// An eigenvalue computed earlier.
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<f64>,
        /// Samples per piece, endpoints included.
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Green's kernel on a square grid.
    Green {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        imag: f64,
        /// Points per axis, endpoints included.
        #[arg(long, default_value_t = 21)]
        grid: usize,
    },
    /// Solve (lambda I - L) u = f.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        imag: f64,
        /// "const:v" or "poly:c0,c1,..." (";" separates pieces).
        #[arg(long, default_value = "const:1")]
        f: String,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Expand (f, 0, 0) in normalized eigenfunctions.
    Expand {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value = "const:1")]
        f: String,
    },
    /// Run the invariant suite and report pass/fail as JSON lines.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { common } => commands::validate(&common),
        Command::Charfn { common, window, grid, imag } => commands::charfn(&common, (window[0], window[1]), grid, imag),
        Command::Eigs { common, window, grid, count } => {
            commands::eigs(&common, window.map(|w| (w[0], w[1])), grid, count)
        }
        Command::Eigenfunction { common, index, lambda, points } => {
            commands::eigenfunction(&common, index, lambda, points)
        }
        Command::Green { common, lambda, imag, grid } => commands::green(&common, lambda, imag, grid),
        Command::Solve { common, lambda, imag, f, points } => commands::solve(&common, lambda, imag, &f, points),
        Command::Expand { common, n, f } => commands::expand(&common, n, &f),
        Command::Verify { common } => verify::verify(&common),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bvtp: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

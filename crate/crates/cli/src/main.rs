//! `dilation`: run moment criteria, build and verify dilations.
//!
//! Exit codes: 0 all YES, 1 malformed input, 2 a NO verdict or failed
//! residual, 3 BORDERLINE without any NO, 4 recursion breakdown.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::Report;
use input::CliError;

pub const DEFAULT_SEED: u64 = 0;

#[derive(Parser, Debug)]
#[command(name = "dilation", version, about = "Dilations of operator moment sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct Shared {
    /// Input document (sequence, instance, pair or operator)
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol_abs: f64,
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol_rel: f64,
    /// Levels, order or copies; each command documents its default
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Random candidates for the sampling tier of the Toeplitz criteria
    #[arg(long, global = true, default_value_t = 64)]
    pub trials: usize,
    /// Comma-separated radii in [0, 1)
    #[arg(long, global = true, value_delimiter = ',')]
    pub grid_radii: Option<Vec<f64>>,
    #[arg(long, global = true, default_value_t = 64)]
    pub grid_angles: usize,
    /// Leave out timestamp and wall time so reports are byte-identical
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run existence criteria on a sequence or an (A, T) pair
    Check {
        #[arg(long, value_delimiter = ',', required = true)]
        criterion: Vec<CriterionName>,
    },
    /// Build a dilation, re-verify it and write it
    Dilate {
        #[arg(long)]
        kind: DilateKind,
    },
    /// Jacobi parameters of a scalar sequence
    Jacobi,
    /// Check a saved operator against a sequence
    Verify {
        #[arg(long)]
        operator: PathBuf,
        /// Second operator to compare by corner moments
        #[arg(long)]
        operator2: Option<PathBuf>,
        /// Structure to check; defaults to the kind stored with the operator
        #[arg(long)]
        kind: Option<KindName>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionName {
    #[value(alias = "hamburger")]
    Hankel,
    SelfadjointContraction,
    #[value(alias = "completely-monotone")]
    Cm,
    Toeplitz,
    Poisson,
    Zeta,
    Kernel,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DilateKind {
    Gns,
    Tridiagonal,
    Isometric,
    SchafferIsometry,
    SchafferUnitary,
    CaPartial,
    CaIsometric,
    CaUnitary,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindName {
    SelfAdjoint,
    Positive,
    Isometric,
    Unitary,
    Partial,
}

fn run(cli: Cli) -> Result<Report, CliError> {
    let shared = &cli.shared;
    match &cli.command {
        Command::Check { criterion } => commands::check(shared, criterion),
        Command::Dilate { kind } => commands::dilate(shared, *kind),
        Command::Jacobi => commands::jacobi(shared),
        Command::Verify { operator, operator2, kind } => {
            commands::verify(shared, operator, operator2.as_deref(), *kind)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let output = cli.shared.output.clone();
    match run(cli).and_then(|report| commands::emit(&report, output.as_deref()).map(|()| report)) {
        Ok(report) => ExitCode::from(report.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

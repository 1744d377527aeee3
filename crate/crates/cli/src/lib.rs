//! The `polya` command-line tool: simulation, exhaustive verification,
//! partition enumeration, likelihood fitting and law comparison for
//! measure-valued Pólya urn sequences.
//!
//! Exit codes are a stable contract: 0 when every requested check passes, 1
//! when a check fails or a size guard trips, 2 on malformed input.

pub mod commands;
pub mod model;
pub mod number;
pub mod pretty;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Guard(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Guard(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl From<mvps::Error> for CliError {
    fn from(e: mvps::Error) -> Self {
        use mvps::Error::*;
        match e {
            OutOfRange { .. }
            | HorizonExceeded { .. }
            | EdgeMaximum { .. }
            | Flat
            | Degenerate(_)
            | NotSufficient(_)
            | NotConstantMass => CliError::Guard(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "polya",
    version,
    about = "Measure-valued Pólya urn sequences: simulate, verify, fit"
)]
pub struct Cli {
    /// Run enumerations, replicates and fits on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    #[arg(long, env = "POLYA_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Exchangeability,
    Identities,
    Johnson,
    Hill,
    Characterize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a trajectory and write it as CSV.
    Simulate {
        model: String,
        #[arg(short = 'n', long)]
        n: usize,
        #[command(flatten)]
        seed: SeedArg,
        /// Output file (stdout when omitted).
        #[arg(short, long)]
        out: Option<String>,
    },
    /// Run exhaustive exact checks and print a JSON report.
    Verify {
        model: String,
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        suite: Vec<Suite>,
        #[arg(long, default_value_t = 5)]
        max_len: usize,
        /// Partition for the sufficientness suites, e.g. `x1|x2,x3`.
        #[arg(long)]
        partition: Option<String>,
        #[arg(long)]
        pretty: bool,
    },
    /// List every partition of k states, one per line.
    Enumerate { k: usize },
    /// Print the Bell number B_k.
    Bell { k: usize },
    /// Maximum-likelihood fit of (partition, θ) to a trajectory CSV.
    Fit {
        trajectory: String,
        /// JSON file with `nu` (and optionally `states`).
        #[arg(long)]
        nu: Option<String>,
        /// Estimate ν from the data with add-one smoothing.
        #[arg(long)]
        estimate_nu: bool,
        /// Number of states, labelled x1..xk.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        states: Option<Vec<String>>,
        #[arg(long)]
        pretty: bool,
    },
    /// Compare urn and hierarchical samplers against the exact block law.
    CompareLaws {
        model: String,
        #[arg(long)]
        prefix: usize,
        #[arg(long)]
        reps: usize,
        #[command(flatten)]
        seed: SeedArg,
        /// Also write per-sequence probabilities as CSV.
        #[arg(long)]
        csv: Option<String>,
        #[arg(long)]
        pretty: bool,
    },
    /// Validate a model file and print its canonical form.
    Model { model: String },
}

/// Runs the tool on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return 0;
                }
                _ => 2,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match commands::dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

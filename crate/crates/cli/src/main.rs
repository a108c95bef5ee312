//! `polya`: analyze, simulate and verify generalized Pólya urns.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Checkpoints;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "polya", version, about = "Generalized Pólya urns balanced in expectation")]
pub struct Cli {
    /// TOML file with default values for any flag; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct SimFlags {
    /// Number of steps.
    #[arg(long)]
    pub n: Option<u64>,
    /// Independent trajectories.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct TolFlags {
    #[arg(long)]
    pub cluster_tol: Option<f64>,
    #[arg(long)]
    pub rank_tol: Option<f64>,
    #[arg(long)]
    pub proj_tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral analysis of a spec: eigenvalue clusters, projections, (lambda_1, v_1), classification.
    Analyze {
        /// Spec JSON file, or `builtin:<name>`.
        spec: Option<String>,
        #[command(flatten)]
        tol: TolFlags,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run an ensemble and write it as CSV (or binary with `--binary`).
    Simulate {
        spec: Option<String>,
        #[command(flatten)]
        sim: SimFlags,
        /// `pow2` or a comma-separated list.
        #[arg(long, value_parser = Checkpoints::parse_flag)]
        checkpoints: Option<Checkpoints>,
        #[arg(long)]
        binary: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Conditional estimators with bootstrap standard errors from an ensemble CSV.
    Estimate {
        /// Ensemble CSV written by `simulate`.
        input: Option<PathBuf>,
        /// Moment orders, comma-separated.
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<f64>>,
        /// Also write the long-format statistics table here.
        #[arg(long)]
        stats_csv: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Decomposition audit and martingale-difference check.
    Audit {
        spec: Option<String>,
        #[command(flatten)]
        sim: SimFlags,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Exact law of X_n by enumeration.
    Oracle {
        spec: Option<String>,
        #[arg(long)]
        n: Option<u64>,
        /// Maximum number of distinct states at any step.
        #[arg(long)]
        node_budget: Option<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Built-in application models.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Run the acceptance suite.
    Verify {
        #[arg(long)]
        suite: Option<String>,
        /// `desk` or `ci`.
        #[arg(long)]
        budget: Option<String>,
        /// Restrict to these criteria, comma-separated.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u8>>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// Uniform attachment with freezing: emit the urn spec, or grow trees with `--simulate`.
    Freezing {
        #[arg(long = "K", alias = "k")]
        k: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        simulate: bool,
        #[command(flatten)]
        sim: SimFlags,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Hooking networks simulated at graph level.
    Hooking {
        /// Parameters JSON, or `builtin:edge|triangle|mixed`.
        params: Option<String>,
        #[command(flatten)]
        sim: SimFlags,
        #[arg(long, value_parser = Checkpoints::parse_flag)]
        checkpoints: Option<Checkpoints>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match commands::execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

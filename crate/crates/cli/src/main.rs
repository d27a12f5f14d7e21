mod commands;
mod manifest;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hais_core::HaisError;

/// Partition functions and log likelihoods of continuous energy models by
/// Hamiltonian annealed importance sampling.
#[derive(Debug, Parser)]
#[command(name = "hais", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the log partition function of an analysis model.
    Estimate(EstimateArgs),
    /// Average log likelihood of a dataset under a model.
    Loglik(LoglikArgs),
    /// Estimates over a grid of N for several estimators.
    Sweep(SweepArgs),
    /// Extract patches or read a matrix, then PCA-whiten it.
    Preprocess(PreprocessArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Root seed of every random stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Directory for output files and the run manifest.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AnnealArgs {
    /// Number of particles.
    #[arg(long, default_value_t = 200)]
    pub particles: usize,
    /// Leapfrog step size.
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    /// Momentum refresh fraction; defaults to 1 - 2^(-epsilon).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Random-walk proposal std for ais-mh.
    #[arg(long, default_value_t = 0.1)]
    pub mh_sigma: f64,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Model parameter file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Number of intermediate distributions.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// One of hais, ais-mh, ais-hmc-reset.
    #[arg(long, default_value = "hais")]
    pub estimator: String,
    /// Write the final log weight of every particle to this CSV file.
    #[arg(long)]
    pub particles_out: Option<PathBuf>,
    #[command(flatten)]
    pub anneal: AnnealArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct LoglikArgs {
    /// Model parameter file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Data matrix, one datapoint per row (text or binary).
    #[arg(long)]
    pub data: PathBuf,
    /// Run one chain per datapoint over the model's auxiliary variables.
    #[arg(long)]
    pub generative: bool,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value = "hais")]
    pub estimator: String,
    #[command(flatten)]
    pub anneal: AnnealArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Comma separated numbers of intermediate distributions.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    /// Comma separated estimator names.
    #[arg(long, value_delimiter = ',', default_value = "hais,ais-hmc-reset,ais-mh")]
    pub estimators: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Also write sweep.svg.
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub anneal: AnnealArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// PGM images to sample patches from.
    #[arg(long, num_args = 1.., conflicts_with = "matrix", required_unless_present = "matrix")]
    pub images: Vec<PathBuf>,
    /// A data matrix to whiten directly.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Edge length of square patches.
    #[arg(long, default_value_t = 16)]
    pub patch_edge: usize,
    #[arg(long, default_value_t = 10_000)]
    pub n_patches: usize,
    /// Skip the log of pixel values.
    #[arg(long)]
    pub no_log: bool,
    /// Principal components to keep; defaults to all.
    #[arg(long)]
    pub components: Option<usize>,
    /// Apply this saved transform instead of fitting a new one.
    #[arg(long)]
    pub apply_transform: Option<PathBuf>,
    /// Write the whitened matrix in the binary format.
    #[arg(long)]
    pub binary: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, files or data: exit 2.
    Usage(String),
    /// Numerical or runtime failure: exit 1.
    Runtime(String),
}

impl From<HaisError> for CliError {
    fn from(e: HaisError) -> Self {
        if e.is_input_error() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(a) => commands::estimate(&a, &argv),
        Command::Loglik(a) => commands::loglik(&a, &argv),
        Command::Sweep(a) => commands::sweep(&a, &argv),
        Command::Preprocess(a) => commands::preprocess(&a, &argv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

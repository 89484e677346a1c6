//! `curvebump`: curvature bumps of point data from the command line.

mod commands;
mod error;
mod ingest;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use curvebump::Functional;

use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "curvebump", version, about = "Find curvature bumps in point data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate bump boundaries and write them as JSON.
    Fit(FitArgs),
    /// Add bootstrap confidence regions to the estimated bump.
    Confidence(ConfidenceArgs),
    /// Run a Monte-Carlo experiment against a Gaussian-mixture ground truth.
    Simulate(SimulateArgs),
}

#[derive(Args, Clone)]
pub struct FitArgs {
    /// CSV file with one point per row.
    #[arg(long)]
    pub input: PathBuf,
    /// Columns by header name or zero-based index; default: all (1 to 3).
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    /// concave, convex, laplacian, mean-curvature, hessian-determinant or
    /// gaussian-curvature.
    #[arg(long, default_value = "concave")]
    pub functional: Functional,
    /// `auto` (normal-scale rule, r = 2) or a positive number.
    #[arg(long, default_value = "auto")]
    pub bandwidth: String,
    /// Nodes per axis: one number, or one per axis separated by commas.
    /// Default: 401, 161² or 101³.
    #[arg(long)]
    pub grid: Option<String>,
    /// `lo:hi` per axis separated by commas, or `auto` (data range ± 3h).
    #[arg(long, allow_hyphen_values = true)]
    pub bounds: Option<String>,
    /// Output JSON path.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional SVG figure (d <= 2).
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Clone)]
pub struct ConfidenceArgs {
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Number of bootstrap replicates.
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    /// Resample size; default: the sample size.
    #[arg(long)]
    pub resample_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scale constant of the determinant-bump margin; must exceed 1/(π h⁴).
    #[arg(long)]
    pub gaussian_constant: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Convergence,
    Coverage,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    /// Two correlated bivariate components (bent, boomerang-shaped density).
    Boomerang,
    /// Standard normal in `--dim` dimensions.
    Normal,
}

#[derive(Args, Clone)]
pub struct SimulateArgs {
    #[arg(long)]
    pub experiment: Experiment,
    /// Built-in model; default: boomerang for convergence, 1D normal for
    /// coverage.
    #[arg(long)]
    pub model: Option<Model>,
    /// Dimension of the `normal` model.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// JSON mixture `{weights, means, covariances}` instead of a built-in model.
    #[arg(long, conflicts_with = "model")]
    pub model_file: Option<PathBuf>,
    #[arg(long, default_value = "laplacian")]
    pub functional: Functional,
    /// Sample sizes; default: 500,2000,8000 (convergence) or 200,3200 (coverage).
    #[arg(long, value_delimiter = ',')]
    pub n_list: Vec<usize>,
    /// Replicates per sample size; default: 20 (convergence), 200 (coverage).
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub grid: Option<String>,
    /// `lo:hi` per axis; default: [-4,4]^d.
    #[arg(long, allow_hyphen_values = true)]
    pub bounds: Option<String>,
    /// Coverage only: fixed bandwidth, or `auto` for the population
    /// normal-scale rule at each n.
    #[arg(long, default_value = "auto")]
    pub bandwidth: String,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    /// Coverage only: replace the bootstrap margin (test hook; accepts `inf`).
    #[arg(long)]
    pub zeta_override: Option<f64>,
    /// Convergence only: compare boundaries where the true density is at
    /// least this fraction of its peak (default 0.01; 0 disables).
    #[arg(long)]
    pub density_floor: Option<f64>,
    /// Convergence only: use the true model as the estimate.
    #[arg(long)]
    pub self_test: bool,
    /// Output JSON report.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional CSV summary, one row per sample size.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("CURVEBUMP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("CURVEBUMP_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Resource(format!("cannot start {n} worker threads: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Fit(args) => commands::fit(&args),
        Command::Confidence(args) => commands::confidence(&args),
        Command::Simulate(args) => commands::simulate(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `sirkit` — sliced inverse regression with regularization from the
//! command line: summarize data, fit estimators, demonstrate the ridge
//! degeneracy, construct counterexamples, select the ridge weight by
//! cross-validation, and generate benchmark data.

mod commands;
mod errors;
mod input;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use errors::CliResult;

#[derive(Parser)]
#[command(
    name = "sirkit",
    version,
    about = "Sliced inverse regression with regularization",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the classical or regularized SIR estimator to a CSV dataset.
    Fit(FitArgs),
    /// Run the minimizer-existence test and the alternating iteration,
    /// recording the collapse of the ridge estimator.
    Degeneracy(DegeneracyArgs),
    /// Construct an explicit pair strictly below the zero-basis plateau,
    /// certifying that the ridge minimizer does not exist.
    Counterexample(CounterexampleArgs),
    /// Select the regularization weight by cross-validation over a grid.
    Cv(CvArgs),
    /// Generate a synthetic index-model dataset as CSV.
    Simulate(SimulateArgs),
    /// Print slice frequencies, mean separations and covariance spectrum.
    Summarize(SummarizeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Sir,
    Rsir,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkArg {
    Linear,
    Cubic,
    Sinh,
    Square,
}

impl From<LinkArg> for sirkit::Link {
    fn from(value: LinkArg) -> Self {
        match value {
            LinkArg::Linear => sirkit::Link::Linear,
            LinkArg::Cubic => sirkit::Link::Cubic,
            LinkArg::Sinh => sirkit::Link::SinhLike,
            LinkArg::Square => sirkit::Link::Square,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Response column, by header name or 0-based index.
    #[arg(long)]
    response: String,
    /// Number of response slices.
    #[arg(long, default_value_t = 5)]
    slices: usize,
    /// Dimension of the estimated subspace.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Regularization weight; required for --method rsir.
    #[arg(long, required_if_eq("method", "rsir"))]
    tau: Option<f64>,
    /// Where to write the fit result JSON.
    #[arg(long)]
    output: PathBuf,
    /// Optional basis CSV next to the JSON output.
    #[arg(long)]
    basis_out: Option<PathBuf>,
    /// Manifest path; defaults to `<output>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct DegeneracyArgs {
    /// Input CSV with a header row.
    #[arg(long, conflicts_with_all = ["builtin_2d", "simulate"])]
    input: Option<PathBuf>,
    /// Response column for --input, by header name or 0-based index.
    #[arg(long)]
    response: Option<String>,
    /// Use the built-in two-predictor fixture with its hand-checkable
    /// trajectory 1, 1/2, 2/5, 10/29, ...
    #[arg(long, conflicts_with = "simulate")]
    builtin_2d: bool,
    /// Draw a synthetic dataset instead of reading one.
    #[arg(long)]
    simulate: bool,
    #[arg(long, default_value_t = 200)]
    sim_n: usize,
    #[arg(long, default_value_t = 5)]
    sim_p: usize,
    #[arg(long, default_value_t = 1)]
    sim_dim: usize,
    #[arg(long, value_enum, default_value_t = LinkArg::Linear)]
    sim_link: LinkArg,
    #[arg(long, default_value_t = 0.0)]
    sim_rho: f64,
    #[arg(long, default_value_t = 1.0)]
    sim_noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    sim_seed: u64,
    /// Number of response slices; defaults to 2 for the builtin fixture
    /// and 5 otherwise.
    #[arg(long)]
    slices: Option<usize>,
    /// Ridge weight; must be strictly positive.
    #[arg(long)]
    tau: f64,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Iteration budget.
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    /// Seed for the Gaussian initialization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    init_scale: f64,
    /// Stop once the basis norm falls below this.
    #[arg(long, default_value_t = 1e-6)]
    a_tol: f64,
    /// Per-iteration trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Per-iteration trace as plot-ready CSV.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
    /// Existence report and run summary as JSON.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct CounterexampleArgs {
    /// Input CSV with a header row.
    #[arg(long, conflicts_with = "builtin_2d")]
    input: Option<PathBuf>,
    /// Response column for --input, by header name or 0-based index.
    #[arg(long)]
    response: Option<String>,
    #[arg(long)]
    builtin_2d: bool,
    /// Number of response slices; defaults to 2 for the builtin fixture
    /// and 5 otherwise.
    #[arg(long)]
    slices: Option<usize>,
    /// Ridge weight; must be strictly positive.
    #[arg(long)]
    tau: f64,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Position of epsilon inside its admissible open interval.
    #[arg(long, default_value_t = 0.5)]
    epsilon_fraction: f64,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct CvArgs {
    #[arg(long)]
    input: PathBuf,
    /// Response column, by header name or 0-based index.
    #[arg(long)]
    response: String,
    #[arg(long, default_value_t = 5)]
    slices: usize,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Comma-separated, strictly increasing tau grid.
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Seed for the stratified fold assignment.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Selection result as JSON.
    #[arg(long)]
    output: PathBuf,
    /// Score-versus-tau table as CSV.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    p: usize,
    /// Dimension of the true central subspace.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, value_enum, default_value_t = LinkArg::Linear)]
    link: LinkArg,
    /// AR(1) correlation between predictor coordinates.
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed for the random orthonormal true basis; derived from --seed
    /// when omitted.
    #[arg(long)]
    basis_seed: Option<u64>,
    /// Where to write the dataset CSV.
    #[arg(long)]
    output: PathBuf,
    /// Also write the true basis as CSV, for recovery scoring.
    #[arg(long)]
    basis_out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Response column, by header name or 0-based index.
    #[arg(long)]
    response: String,
    #[arg(long, default_value_t = 5)]
    slices: usize,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Fit(args) => commands::fit(args),
        Command::Degeneracy(args) => commands::degeneracy(args),
        Command::Counterexample(args) => commands::counterexample(args),
        Command::Cv(args) => commands::cv(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Summarize(args) => commands::summarize(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

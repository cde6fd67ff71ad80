//! `macs`: critical constants, band comparison tables and expiry analysis
//! for percentile-line confidence bands.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use macs::{BandForm, TableId};

/// Default location of the drug-stability batch data.
pub const DEFAULT_DATA: &str = "examples/ruberg_hsu_batch1.csv";

#[derive(Parser, Debug)]
#[command(name = "macs", version, about = "Exact simultaneous confidence bands for percentile lines")]
pub struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "MACS_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the critical constants for one band and scenario
    Solve(SolveArgs),
    /// Regenerate a comparison table (T2, T3, T4, or T5 from the drug data)
    Table(TableArgs),
    /// TBEa/UVa area ratio as a function of the fan angle
    Curve(CurveArgs),
    /// Fit the drug-stability data and find where the band crosses a threshold
    Expiry(ExpiryArgs),
    /// Run an oracle suite against the analytic code
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ToleranceArg {
    /// Quadrature tolerance for coverage (inner integrals use a tenth of it)
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Band form: SB, TBU, TBE, V, UV, TT (a trailing 'a' selects the asymmetric variant)
    #[arg(long)]
    pub band: BandForm,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub n: u32,
    /// Symmetric interval (−s, s) with S_xx = 1
    #[arg(long, conflicts_with_all = ["a", "b", "sxx"], required_unless_present_all = ["a", "b", "sxx"])]
    pub s: Option<f64>,
    /// Lower end of the interval, centred (x − x̄)
    #[arg(long, allow_hyphen_values = true, requires_all = ["b", "sxx"])]
    pub a: Option<f64>,
    /// Upper end of the interval, centred (x − x̄)
    #[arg(long, allow_hyphen_values = true, requires_all = ["a", "sxx"])]
    pub b: Option<f64>,
    #[arg(long, requires_all = ["a", "b"])]
    pub sxx: Option<f64>,
    /// Minimize area over unequal constants
    #[arg(long)]
    pub asymmetric: bool,
    #[command(flatten)]
    pub tol: ToleranceArg,
    /// Cross-check the coverage by simulation
    #[arg(long)]
    pub mc_check: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub draws: u64,
    /// Print JSON instead of text
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    #[arg(long)]
    pub id: TableId,
    /// Directory for table_<id>.csv / .json
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
    #[command(flatten)]
    pub tol: ToleranceArg,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Drug-stability CSV (header x,y)
    #[arg(long, env = "MACS_DRUG_DATA", default_value = DEFAULT_DATA)]
    pub data: PathBuf,
    /// Data-driven scenarios: confidence parameter
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Data-driven scenarios: percentile
    #[arg(long, default_value_t = 0.05)]
    pub gamma: f64,
    /// Data-driven scenarios: interval in original x units
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.0, 2.0], allow_hyphen_values = true)]
    pub x_range: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub n: u32,
    /// Confidence parameters; one curve each
    #[arg(long, num_args = 1.., default_values_t = [0.1, 0.01])]
    pub alpha: Vec<f64>,
    #[arg(long, default_value_t = 0.3)]
    pub phi_min: f64,
    #[arg(long, default_value_t = 3.1)]
    pub phi_max: f64,
    #[arg(long, default_value_t = 29)]
    pub points: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub tol: ToleranceArg,
}

#[derive(Args, Debug)]
pub struct ExpiryArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "UVa")]
    pub band: BandForm,
    /// Content threshold
    #[arg(long)]
    pub h: f64,
    /// Also write the band on a grid to this CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tol: ToleranceArg,
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum Suite {
    Areas,
    Density,
    Coverage,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Random cases to draw
    #[arg(long, default_value_t = 20)]
    pub cases: usize,
    /// Simulation draws per case
    #[arg(long, default_value_t = 1_000_000)]
    pub draws: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

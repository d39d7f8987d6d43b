use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use npreg_core::Kernel;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Parser, Serialize, Deserialize)]
#[command(name = "npreg", version, about = "Kernel regression, variance estimation and joint bands for spatial data")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Global {
    /// Worker threads for Monte Carlo commands (default: all cores). Never changes results.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Base seed for simulation and Monte Carlo commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// epanechnikov, uniform or triangular.
    #[arg(long, global = true, default_value = "epanechnikov")]
    pub kernel: Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Draw a dataset from the lattice moving-average process.
    Simulate(SimulateArgs),
    /// Evaluate one estimator on a design grid.
    Estimate(EstimateArgs),
    /// Joint confidence band over a design grid.
    Band(BandArgs),
    /// Two-stage data-driven bandwidth choice; always writes JSON.
    SelectBandwidth(SelectArgs),
    /// Replicated normalised scores for the mean and variance estimators.
    McClt(McArgs),
    /// Replicated joint-band coverage.
    McCoverage(McArgs),
    /// Sup-norm losses and adjacent distances over a bandwidth grid.
    LossCurves(LossArgs),
    /// Replicated two-stage bandwidth selection.
    McSelect(LossArgs),
    /// Re-run a command from the config echo in one of its outputs.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 750)]
    pub n: usize,
    /// Lattice side length; defaults to n.
    #[arg(long)]
    pub side: Option<usize>,
    /// Dataset CSV; the JSON sidecar goes next to it with a .json extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateTarget {
    Density,
    Mean,
    Jackknife,
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandTargetArg {
    Density,
    Mean,
    Variance,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EstimateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub target: EstimateTarget,
    /// Bandwidth of the requested estimator (h for variance).
    #[arg(long, default_value_t = 0.5)]
    pub bandwidth: f64,
    /// Jackknife-mean bandwidth used for variance residuals.
    #[arg(long, default_value_t = 0.5)]
    pub mean_bandwidth: f64,
    /// Design points as start:step:stop (inclusive) or a single value.
    #[arg(long, default_value = "-0.5:0.1:0.5", allow_hyphen_values = true)]
    pub points: String,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BandArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub target: BandTargetArg,
    #[arg(long, default_value_t = 0.05)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    #[arg(long, default_value_t = 0.5)]
    pub h: f64,
    #[arg(long, default_value = "-0.5:0.1:0.5", allow_hyphen_values = true)]
    pub points: String,
    /// Scale every band by √(n·h) instead of each target's own bandwidth.
    #[arg(long)]
    pub common_variance_bandwidth: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GridArgs {
    /// Pilot bandwidth for the mean grid.
    #[arg(long, default_value_t = 1.0)]
    pub pilot_mean: f64,
    /// Pilot bandwidth for the variance grid.
    #[arg(long, default_value_t = 1.0)]
    pub pilot_variance: f64,
    /// Grid size L.
    #[arg(long, default_value_t = 20)]
    pub grid_size: usize,
    /// Selection threshold; the first d_l below threshold·min wins.
    #[arg(long, default_value_t = 2.0)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SelectArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "-0.5:0.1:0.5", allow_hyphen_values = true)]
    pub points: String,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct McArgs {
    /// Number of replications (default 250 for mc-clt, 500 for mc-coverage).
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long, default_value_t = 750)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    #[arg(long, default_value_t = 0.5)]
    pub h: f64,
    /// Design points (default -0.25:0.25:0.25 for mc-clt, -0.5:0.1:0.5 otherwise).
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    /// Comma-separated band levels.
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    pub tau: Vec<f64>,
    #[arg(long)]
    pub common_variance_bandwidth: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LossArgs {
    #[arg(long, default_value_t = 50)]
    pub replications: usize,
    #[arg(long, default_value_t = 750)]
    pub n: usize,
    /// Jackknife-mean bandwidth for the variance residuals.
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    #[arg(long, default_value = "-0.5:0.1:0.5", allow_hyphen_values = true)]
    pub points: String,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Any JSON output carrying a "config" echo.
    #[arg(long)]
    pub config: PathBuf,
    /// Redirect the replayed command's file output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    /// Points the command's primary output at `path`.
    pub fn redirect(&mut self, path: PathBuf) {
        match self {
            Command::Simulate(a) => a.out = path,
            Command::Estimate(a) => a.out = Some(path),
            Command::Band(a) => a.out = Some(path),
            Command::SelectBandwidth(a) => a.out = Some(path),
            Command::McClt(a) | Command::McCoverage(a) => a.out_dir = path,
            Command::LossCurves(a) | Command::McSelect(a) => a.out_dir = path,
            Command::Replay(a) => a.out = Some(path),
        }
    }
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "rvi",
    version,
    about = "How strong must added covariates be to make an insignificant estimate significant?"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Significance level.
    #[arg(long, global = true, default_value_t = 0.05)]
    pub alpha: f64,

    /// Null value of the treatment coefficient.
    #[arg(long = "null", global = true, default_value_t = 0.0, allow_negative_numbers = true)]
    pub null_value: f64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Robustness values from a reported estimate and standard error (or t).
    Summary(FitArgs),
    /// Fit a model from a CSV file and benchmark covariates against it.
    Analyze(AnalyzeArgs),
    /// Adjusted |t| over a grid of partial R² values.
    Grid(GridArgs),
    /// Closed-form bound on |t| over subsets of optional covariates.
    Bound(SearchArgs),
    /// Fit every subset of the optional covariates.
    Enumerate(EnumerateArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// t-statistic of the treatment coefficient.
    #[arg(long = "t", allow_negative_numbers = true)]
    pub t: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    pub estimate: Option<f64>,

    #[arg(long = "se")]
    pub std_error: Option<f64>,

    /// Residual degrees of freedom of the reported regression.
    #[arg(long)]
    pub df: u64,

    /// Also report the minimal R²_y when R²_d is capped at this value (repeatable).
    #[arg(long = "r2d-cap")]
    pub r2d_caps: Vec<f64>,

    /// Also cap R²_d at the 95th percentile expected by chance for a randomized treatment.
    #[arg(long)]
    pub q95: bool,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,

    #[arg(long)]
    pub outcome: String,

    #[arg(long)]
    pub treatment: String,

    /// Fit without an intercept.
    #[arg(long)]
    pub no_intercept: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Comma-separated covariate columns.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,

    /// Comma-separated columns whose observed strength is reported.
    #[arg(long = "benchmark", value_delimiter = ',')]
    pub benchmarks: Vec<String>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub fit: FitArgs,

    #[arg(long = "r2y-max")]
    pub r2_y_max: f64,

    #[arg(long = "r2d-max")]
    pub r2_d_max: f64,

    /// Points per axis.
    #[arg(long, default_value_t = rvi_core::grid::DEFAULT_RESOLUTION)]
    pub resolution: usize,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Comma-separated covariates present in every specification.
    #[arg(long, value_delimiter = ',')]
    pub base: Vec<String>,

    /// Comma-separated covariates toggled on and off.
    #[arg(long, value_delimiter = ',')]
    pub optional: Vec<String>,

    /// Charge one degree of freedom per optional covariate in the bound.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub search: SearchArgs,

    /// Largest number of optional covariates to enumerate.
    #[arg(long, default_value_t = rvi_core::specsearch::DEFAULT_CAP)]
    pub cap: usize,
}

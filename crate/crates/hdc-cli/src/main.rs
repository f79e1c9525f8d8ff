//! `hdc` — train, evaluate, and cost-model hyperdimensional classifiers
//! whose encoders reproduce approximate FPGA datapaths bit for bit.
//!
//! Exit codes: 0 on success, 1 on runtime failures, 2 on usage errors.

mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdc::dataset::LabelColumn;
use hdc::encoders::EncoderKind;

#[derive(Parser)]
#[command(
    name = "hdc",
    version,
    about = "Hyperdimensional classification with hardware-faithful approximate encoders"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Train a model on a labeled CSV dataset and write a model file
    Train(TrainArgs),
    /// Evaluate a saved model on a labeled CSV dataset
    Eval(EvalArgs),
    /// Estimate FPGA resources, cycles, and optionally power
    Estimate(EstimateArgs),
    /// Train and evaluate a list of encoders and tabulate the trade-offs
    Sweep(SweepArgs),
    /// Generate a synthetic Gaussian-cluster dataset as CSV
    GenData(GenDataArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Args)]
pub struct CsvArgs {
    /// Label column: a name from the header or an index (negative counts
    /// from the last column)
    #[arg(long, default_value = "-1")]
    pub label_col: LabelColumn,
    /// Treat the first CSV row as data instead of a header
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Args)]
pub struct ModelParams {
    /// Encoder: exact | maj | maj2 | overfeed | trunc:<k> (k >= 2)
    #[arg(long, default_value = "exact")]
    pub encoder: EncoderKind,
    /// Hypervector dimension (positive multiple of 64)
    #[arg(long, default_value_t = 2048)]
    pub dhv: usize,
    /// Quantization level count (2*levels must divide --dhv)
    #[arg(long, default_value_t = 16)]
    pub levels: usize,
    /// Master seed for all generated tables
    #[arg(long, default_value_t = hdc::DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Training dataset (CSV)
    #[arg(long)]
    pub data: PathBuf,
    /// Held-out dataset to score after training
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
    #[command(flatten)]
    pub params: ModelParams,
    /// Refinement epochs
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    /// Learning rate; omit to search by bisection on an 80/20 split
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Reshuffle the sample order each epoch (seeded)
    #[arg(long)]
    pub shuffle: bool,
    /// Hardware description file; adds a resource report
    #[arg(long)]
    pub hw: Option<PathBuf>,
    /// Power calibration table (used with --hw)
    #[arg(long)]
    pub power_cal: Option<PathBuf>,
    /// Training samples used for activity estimation
    #[arg(long, default_value_t = 100)]
    pub activity_samples: usize,
    /// Where to write the model file
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Model file written by `hdc train`
    #[arg(long)]
    pub model: PathBuf,
    /// Evaluation dataset (CSV)
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub csv: CsvArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

/// Exactly one source for the input feature count.
#[derive(Args)]
#[group(required = true, multiple = false)]
pub struct WidthSource {
    /// Input feature count
    #[arg(long)]
    pub div: Option<usize>,
    /// Dataset to take the feature count (and activity samples) from
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub params: ModelParams,
    #[command(flatten)]
    pub width: WidthSource,
    #[command(flatten)]
    pub csv: CsvArgs,
    /// Hardware description file
    #[arg(long)]
    pub hw: PathBuf,
    /// Power calibration table; needs --data for activity measurement
    #[arg(long)]
    pub power_cal: Option<PathBuf>,
    /// Samples used for activity estimation
    #[arg(long, default_value_t = 100)]
    pub activity_samples: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Training dataset (CSV)
    #[arg(long)]
    pub data: PathBuf,
    /// Held-out dataset scored per encoder
    #[arg(long)]
    pub test: PathBuf,
    #[command(flatten)]
    pub csv: CsvArgs,
    /// Comma-separated encoder list
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "exact,maj,maj2,overfeed,trunc:3,trunc:4"
    )]
    pub encoders: Vec<EncoderKind>,
    /// Hypervector dimension (positive multiple of 64)
    #[arg(long, default_value_t = 2048)]
    pub dhv: usize,
    /// Quantization level count
    #[arg(long, default_value_t = 16)]
    pub levels: usize,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    /// Learning rate shared by all rows; omit to search per encoder
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = hdc::DEFAULT_SEED)]
    pub seed: u64,
    /// Hardware description file; adds LUT/cycle columns
    #[arg(long)]
    pub hw: Option<PathBuf>,
    /// Power calibration table (used with --hw)
    #[arg(long)]
    pub power_cal: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub activity_samples: usize,
    /// Also write the table to this file
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Args)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 200)]
    pub per_class: usize,
    /// Feature count
    #[arg(long, default_value_t = 64)]
    pub div: usize,
    /// Pairwise centroid distance in within-class standard deviations
    #[arg(long, default_value_t = 6.0)]
    pub separation: f64,
    #[arg(long, default_value_t = hdc::DEFAULT_SEED)]
    pub seed: u64,
    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes (e.g. `hdc sweep | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => run::train(args),
        Command::Eval(args) => run::eval(args),
        Command::Estimate(args) => run::estimate(args),
        Command::Sweep(args) => run::sweep(args),
        Command::GenData(args) => run::gen_data(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

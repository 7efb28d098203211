//! `sewercast`: ingest level/rainfall records, pick lags, train and compare
//! forecasters, predict the next two hours, and run the transfer scenarios.
//!
//! Every subcommand writes into its own run directory (`--out`, else
//! `$SEWERCAST_OUT/<command>`, else `sewercast-runs/<command>`) and leaves a
//! `manifest.json` there. Exit codes: 0 ok, 1 other failure, 2 invalid
//! input, 3 numeric failure, 4 failed audit.

mod data;
mod error;
mod models;
mod run_dir;
mod simulate;
mod svr;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sewercast::metrics::DEFAULT_LEADS;
use sewercast::nn::{DEFAULT_BATCH_SIZE, DEFAULT_DROPOUT, DEFAULT_EPOCHS, DEFAULT_HIDDEN_LAYERS, DEFAULT_HIDDEN_SIZE};
use sewercast::svr::GridSearchSpec;
use sewercast::timeseries::{
    DEFAULT_HORIZON, DEFAULT_MAX_LAG, DEFAULT_STEP_SECONDS, DEFAULT_THRESHOLD, DEFAULT_TOP_K, DEFAULT_TRAIN_FRACTION,
};

use error::CliError;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "sewercast",
    version,
    about = "Pump-station level forecasting and inter-catchment transfer simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic rainfall/level record.
    Synth(SynthArgs),
    /// Validate a record and write summary statistics.
    Ingest(IngestArgs),
    /// Pick input lags by auto- and cross-correlation.
    Lags(LagsArgs),
    /// Write the supervised train/test window sets.
    Windows(WindowsArgs),
    /// Train a neural forecaster.
    Train(TrainArgs),
    /// Score trained models per lead on the test split.
    Evaluate(EvaluateArgs),
    /// Grid-search SVR hyperparameters.
    SvrGrid(SvrGridArgs),
    /// Fit one SVR per lead step.
    SvrTrain(SvrTrainArgs),
    /// Forecast the levels after a reference instant.
    Predict(PredictArgs),
    /// Run transfer scenarios over a storm.
    Simulate(SimulateArgs),
    /// Re-check the mass balance of a written trace.
    Audit(AuditArgs),
    /// Compare analytic and finite-difference gradients.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Fill {
    Reject,
    Hold,
}

#[derive(Debug, Args, Serialize)]
pub struct FrameArgs {
    /// CSV with header `timestamp,level_m,rainfall_mm_s`.
    #[serde(skip)]
    pub input: PathBuf,
    /// Expected step between rows, seconds.
    #[arg(long, default_value_t = DEFAULT_STEP_SECONDS)]
    pub step: i64,
    /// What to do with missing steps.
    #[arg(long, value_enum, default_value_t = Fill::Reject)]
    pub fill: Fill,
}

#[derive(Debug, Args, Serialize)]
pub struct LagArgs {
    /// Use this lag selection (JSON from `lags`) instead of searching.
    #[arg(long = "lags")]
    #[serde(skip)]
    pub lags_file: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_LAG)]
    pub max_lag: usize,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub top_k: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct DatasetArgs {
    /// Forecast steps per window.
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: usize,
    /// Leading share of windows used for training.
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
    pub train_fraction: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct OutArgs {
    /// Run directory.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 10_000)]
    pub records: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Relative noise standard deviation.
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, default_value_t = DEFAULT_STEP_SECONDS)]
    pub step: i64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[command(flatten)]
    pub frame: FrameArgs,
    /// Share of rows counted as the training period in the statistics.
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
    pub train_fraction: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct LagsArgs {
    #[command(flatten)]
    pub frame: FrameArgs,
    #[command(flatten)]
    pub lags: LagArgs,
    /// Search lags on this leading share of rows only.
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
    pub train_fraction: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct WindowsArgs {
    #[command(flatten)]
    pub frame: FrameArgs,
    #[command(flatten)]
    pub lags: LagArgs,
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ffnn,
    Rnn,
    Lstm,
    Gru,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Peephole {
    /// Output gate reads `c_{t-1}`.
    Previous,
    /// Output gate reads `c_t`.
    Current,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub frame: FrameArgs,
    #[command(flatten)]
    pub lags: LagArgs,
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, value_enum, default_value_t = ModelKind::Lstm)]
    pub model: ModelKind,
    #[arg(long, default_value_t = DEFAULT_HIDDEN_LAYERS)]
    pub hidden_layers: usize,
    #[arg(long, default_value_t = DEFAULT_HIDDEN_SIZE)]
    pub hidden_size: usize,
    #[arg(long, default_value_t = DEFAULT_DROPOUT)]
    pub dropout: f64,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    /// adam, rmsprop or sgd.
    #[arg(long, default_value = "adam")]
    pub optimizer: String,
    #[arg(long = "learning-rate", alias = "lr", default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Reshuffle training rows every epoch.
    #[arg(long)]
    pub shuffle: bool,
    /// Global gradient-norm ceiling.
    #[arg(long)]
    pub clip_norm: Option<f64>,
    /// LSTM output-gate peephole input.
    #[arg(long, value_enum, default_value_t = Peephole::Previous)]
    pub peephole: Peephole,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub frame: FrameArgs,
    /// Neural checkpoint from `train`; repeatable.
    #[arg(long = "checkpoint")]
    #[serde(skip)]
    pub checkpoints: Vec<PathBuf>,
    /// SVR model from `svr-train`; repeatable.
    #[arg(long = "svr")]
    #[serde(skip)]
    pub svr_models: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LEADS)]
    pub leads: Vec<usize>,
    /// Split used for SVR models, which do not record one.
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
    pub train_fraction: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SvrGridArgs {
    #[command(flatten)]
    pub frame: FrameArgs,
    #[command(flatten)]
    pub lags: LagArgs,
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, value_delimiter = ',', default_values_t = GridSearchSpec::default().gammas)]
    pub gamma: Vec<f64>,
    #[arg(long = "C", alias = "c", value_delimiter = ',', default_values_t = GridSearchSpec::default().cs)]
    pub c: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = GridSearchSpec::default().epsilons)]
    pub epsilon: Vec<f64>,
    /// Lead steps fitted and scored per cell.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LEADS)]
    pub leads: Vec<usize>,
    /// Trailing share of the training windows held out for scoring.
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
    /// Use only the last this many training windows.
    #[arg(long)]
    pub max_rows: Option<usize>,
    /// SMO stopping tolerance.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SvrTrainArgs {
    #[command(flatten)]
    pub frame: FrameArgs,
    #[command(flatten)]
    pub lags: LagArgs,
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long = "C", alias = "c", default_value_t = 5.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Use only the last this many training windows.
    #[arg(long)]
    pub max_rows: Option<usize>,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    /// Checkpoint from `train` or model from `svr-train`.
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    #[command(flatten)]
    pub frame: FrameArgs,
    /// Row index of the reference instant; defaults to the last row.
    #[arg(long)]
    pub at: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// TOML scenario config.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Run all eight scenarios.
    #[arg(long, conflicts_with = "scenario")]
    pub suite: bool,
    /// Scenario id 1-8; repeatable.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=8))]
    pub scenario: Vec<u8>,
    /// Rainfall CSV (`timestamp,rainfall_mm_s`).
    #[arg(long, conflicts_with = "stochastic")]
    #[serde(skip)]
    pub storm: Option<PathBuf>,
    /// Use a seeded stochastic storm instead of the standard block storm.
    #[arg(long)]
    pub stochastic: bool,
    /// Steps of the stochastic storm.
    #[arg(long, default_value_t = 576)]
    pub stochastic_steps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Step in seconds; overrides the config.
    #[arg(long)]
    pub step: Option<i64>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct AuditArgs {
    /// Trace CSV written by `simulate`.
    #[serde(skip)]
    pub trace: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=8))]
    pub scenario: u8,
    /// TOML config the trace was produced with.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub step: Option<i64>,
}

#[derive(Debug, Args, Serialize)]
pub struct GradcheckArgs {
    /// Random instances per cell variant.
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Largest acceptable relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => data::synth(a),
        Command::Ingest(a) => data::ingest(a),
        Command::Lags(a) => data::lags(a),
        Command::Windows(a) => data::windows(a),
        Command::Train(a) => models::train(a),
        Command::Evaluate(a) => models::evaluate(a),
        Command::Predict(a) => models::predict(a),
        Command::Gradcheck(a) => models::gradcheck(a),
        Command::SvrGrid(a) => svr::grid(a),
        Command::SvrTrain(a) => svr::train(a),
        Command::Simulate(a) => simulate::simulate(a),
        Command::Audit(a) => simulate::audit(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(error::exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

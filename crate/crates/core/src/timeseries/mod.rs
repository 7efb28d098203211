//! Level/rainfall series: loading, scaling, lag analysis and windowing.

mod correlation;
mod frame;
mod lags;
mod scale;
mod stats;
mod windows;

use thiserror::Error;

pub use correlation::{autocorrelation, cross_correlation};
pub use frame::{format_timestamp, parse_timestamp, GapFill, LoadReport, TimeSeriesFrame, DEFAULT_STEP_SECONDS};
pub use lags::{select_lags, LagConfig, LagSelection, DEFAULT_MAX_LAG, DEFAULT_THRESHOLD, DEFAULT_TOP_K};
pub use scale::{fit_scale, Channel, ChannelRange, ScalerParams};
pub use stats::{summary_stats, ChannelStats, SummaryStats};
pub use windows::{
    input_columns, input_row, make_windows, prepare_dataset, split_point, window_count, PreparedDataset,
    SupervisedWindowSet, DEFAULT_HORIZON, DEFAULT_TRAIN_FRACTION,
};

#[derive(Debug, Error)]
pub enum TimeSeriesError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: missing {missing} step(s) starting at {instant}")]
    Gap {
        line: usize,
        instant: String,
        missing: usize,
    },
    #[error("line {line}: timestamp {instant} is {delta}s after the previous row, not a positive multiple of {step}s")]
    Spacing {
        line: usize,
        instant: String,
        delta: i64,
        step: i64,
    },
    #[error("row {row}{}: {column} value {value} is negative or not finite", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Range {
        row: usize,
        line: Option<usize>,
        column: &'static str,
        value: f64,
    },
    #[error("level has {level} values but rainfall has {rainfall}")]
    LengthMismatch { level: usize, rainfall: usize },
    #[error("series too short: need at least {needed} values, have {actual}")]
    TooShort { needed: usize, actual: usize },
    #[error("step must be positive, got {0}s")]
    InvalidStep(i64),
    #[error("{channel} channel is constant (min {min}, max {max}); cannot scale")]
    DegenerateChannel { channel: &'static str, min: f64, max: f64 },
    #[error("series is constant; correlation undefined")]
    ConstantSeries,
    #[error("no {channel} lags reach |r| >= {threshold}")]
    EmptySelection { channel: &'static str, threshold: f64 },
    #[error("invalid lag selection: {0}")]
    InvalidLags(String),
    #[error("horizon must be at least 1")]
    InvalidHorizon,
    #[error("train fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("invalid generator setting: {0}")]
    InvalidGenerator(String),
    #[error("i/o: {0}")]
    Io(String),
}

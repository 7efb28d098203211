use sewercast::metrics::MetricError;
use sewercast::nn::NnError;
use sewercast::sim::SimError;
use sewercast::svr::SvrError;
use sewercast::timeseries::TimeSeriesError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const OTHER: u8 = 1;
    pub const VALIDATION: u8 = 2;
    pub const NUMERIC: u8 = 3;
    pub const AUDIT: u8 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Audit(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            Self::Validation(_) => exit::VALIDATION,
            Self::Numeric(_) => exit::NUMERIC,
            Self::Audit(_) => exit::AUDIT,
            Self::Other(_) => exit::OTHER,
        }
    }
}

impl From<TimeSeriesError> for CliError {
    fn from(e: TimeSeriesError) -> Self {
        match e {
            TimeSeriesError::Io(_) => Self::Other(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::Divergence { .. } | NnError::NonFiniteGradient { .. } => Self::Numeric(e.to_string()),
            NnError::Io(_) => Self::Other(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<SvrError> for CliError {
    fn from(e: SvrError) -> Self {
        match e {
            SvrError::NotConverged { .. } | SvrError::NonFinite | SvrError::NoViableCell => {
                Self::Numeric(e.to_string())
            }
            SvrError::Io(_) => Self::Other(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::NonFinite { .. } => Self::Numeric(e.to_string()),
            SimError::Io(_) => Self::Other(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Other(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Other(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Other(e.to_string())
    }
}

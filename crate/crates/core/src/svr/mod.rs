//! ε-insensitive support vector regression with an RBF kernel.

mod grid;
mod kernel;
mod model;
mod smo;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::{grid_search, score_cell, GridCell, GridResult, GridSearchSpec};
pub use kernel::rbf_kernel;
pub use model::{FitReport, SvrForecaster, SvrModel};
pub use smo::{solve, SmoConfig, SmoSolution};

#[derive(Debug, Error)]
pub enum SvrError {
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("non-finite input or target")]
    NonFinite,
    #[error("no convergence after {iterations} iterations (KKT violation {violation:e})")]
    NotConverged { iterations: usize, violation: f64 },
    #[error("empty hyperparameter grid")]
    EmptyGrid,
    #[error("no grid cell produced a finite score")]
    NoViableCell,
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("I/O error: {0}")]
    Io(String),
}

/// `gamma` is the RBF width, `c` the box bound and `epsilon` the tube
/// half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrHyperparams {
    pub gamma: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub epsilon: f64,
}

impl Default for SvrHyperparams {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            c: 5.0,
            epsilon: 0.01,
        }
    }
}

impl SvrHyperparams {
    pub fn validate(&self) -> Result<(), SvrError> {
        let ok = self.gamma > 0.0
            && self.gamma.is_finite()
            && self.c > 0.0
            && self.c.is_finite()
            && self.epsilon >= 0.0
            && self.epsilon.is_finite();
        if ok {
            Ok(())
        } else {
            Err(SvrError::InvalidHyperparams(format!(
                "need gamma > 0, C > 0, epsilon >= 0 (got {self:?})"
            )))
        }
    }
}

use serde::{Deserialize, Serialize};

use super::correlation::{autocorrelation, cross_correlation};
use super::{Channel, TimeSeriesError, TimeSeriesFrame};

pub const DEFAULT_THRESHOLD: f64 = 0.2;
pub const DEFAULT_TOP_K: usize = 8;
pub const DEFAULT_MAX_LAG: usize = 12;

/// Lag-search settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagConfig {
    pub threshold: f64,
    pub max_lag: usize,
    pub top_k: usize,
}

impl Default for LagConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            max_lag: DEFAULT_MAX_LAG,
            top_k: DEFAULT_TOP_K,
        }
    }
}

/// Which past steps of each channel feed the models.
///
/// Level lags start at 1; rainfall lags may include 0 since rainfall at the
/// reference instant is observed alongside the level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSelection {
    pub level_lags: Vec<usize>,
    pub rainfall_lags: Vec<usize>,
    pub threshold: f64,
    pub max_lag: usize,
}

impl LagSelection {
    pub fn new(
        level_lags: Vec<usize>,
        rainfall_lags: Vec<usize>,
        threshold: f64,
        max_lag: usize,
    ) -> Result<Self, TimeSeriesError> {
        let sel = Self {
            level_lags,
            rainfall_lags,
            threshold,
            max_lag,
        };
        sel.validate()?;
        Ok(sel)
    }

    pub fn validate(&self) -> Result<(), TimeSeriesError> {
        for (lags, channel, min) in [
            (&self.level_lags, Channel::Level, 1),
            (&self.rainfall_lags, Channel::Rainfall, 0),
        ] {
            if lags.is_empty() {
                return Err(TimeSeriesError::EmptySelection {
                    channel: channel.name(),
                    threshold: self.threshold,
                });
            }
            let sorted = lags.windows(2).all(|w| w[0] < w[1]);
            let in_range = lags.iter().all(|&l| l >= min && l <= self.max_lag);
            if !sorted || !in_range {
                return Err(TimeSeriesError::InvalidLags(format!(
                    "{} lags {:?} must be strictly ascending within [{min}, {}]",
                    channel.name(),
                    lags,
                    self.max_lag
                )));
            }
        }
        Ok(())
    }

    /// Input dimension of a flat window row.
    pub fn input_dim(&self) -> usize {
        self.level_lags.len() + self.rainfall_lags.len()
    }
}

fn pick(correlations: &[f64], candidates: impl Iterator<Item = usize>, threshold: f64, top_k: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = candidates.filter(|&lag| correlations[lag].abs() >= threshold).collect();
    // strongest first, earlier lag wins ties
    chosen.sort_by(|&a, &b| correlations[b].abs().total_cmp(&correlations[a].abs()).then(a.cmp(&b)));
    chosen.truncate(top_k);
    chosen.sort_unstable();
    chosen
}

/// Picks level lags by autocorrelation and rainfall lags by rainfall→level
/// cross-correlation, each kept when `|r| >= threshold` and capped to the
/// `top_k` strongest.
pub fn select_lags(frame: &TimeSeriesFrame, config: &LagConfig) -> Result<LagSelection, TimeSeriesError> {
    if config.threshold.is_nan() || config.threshold < 0.0 || config.max_lag == 0 || config.top_k == 0 {
        return Err(TimeSeriesError::InvalidLags(format!(
            "threshold must be >= 0 and max_lag, top_k >= 1 (got {config:?})"
        )));
    }
    let acf = autocorrelation(frame.level(), config.max_lag)?;
    let xcf = cross_correlation(frame.level(), frame.rainfall(), config.max_lag)?;
    let level_lags = pick(&acf, 1..=config.max_lag, config.threshold, config.top_k);
    let rainfall_lags = pick(&xcf, 0..=config.max_lag, config.threshold, config.top_k);
    LagSelection::new(level_lags, rainfall_lags, config.threshold, config.max_lag)
}

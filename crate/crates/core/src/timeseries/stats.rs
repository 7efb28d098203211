use serde::{Deserialize, Serialize};

use super::{TimeSeriesError, TimeSeriesFrame};

/// Max, mean and population standard deviation of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

impl ChannelStats {
    /// Single pass (Welford). Standard deviation divides by `n`.
    pub fn of(values: &[f64]) -> Result<Self, TimeSeriesError> {
        if values.is_empty() {
            return Err(TimeSeriesError::TooShort { needed: 1, actual: 0 });
        }
        let mut max = f64::NEG_INFINITY;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (i, &v) in values.iter().enumerate() {
            max = max.max(v);
            let delta = v - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (v - mean);
        }
        Ok(Self {
            max,
            mean,
            std: (m2 / values.len() as f64).max(0.0).sqrt(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub level: ChannelStats,
    pub rainfall: ChannelStats,
}

pub fn summary_stats(frame: &TimeSeriesFrame) -> Result<SummaryStats, TimeSeriesError> {
    Ok(SummaryStats {
        level: ChannelStats::of(frame.level())?,
        rainfall: ChannelStats::of(frame.rainfall())?,
    })
}

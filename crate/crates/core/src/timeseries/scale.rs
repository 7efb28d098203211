use serde::{Deserialize, Serialize};

use super::{TimeSeriesError, TimeSeriesFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Level,
    Rainfall,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Level => "level",
            Channel::Rainfall => "rainfall",
        }
    }
}

/// Min/max of one channel; maps `[min, max]` onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRange {
    pub min: f64,
    pub max: f64,
}

impl ChannelRange {
    pub fn fit(values: &[f64], channel: Channel) -> Result<Self, TimeSeriesError> {
        let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        let range = Self { min, max };
        range.validate(channel)?;
        Ok(range)
    }

    fn validate(&self, channel: Channel) -> Result<(), TimeSeriesError> {
        if self.min.is_finite() && self.max.is_finite() && self.max > self.min {
            Ok(())
        } else {
            Err(TimeSeriesError::DegenerateChannel {
                channel: channel.name(),
                min: self.min,
                max: self.max,
            })
        }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    #[inline]
    pub fn invert(&self, x: f64) -> f64 {
        x * (self.max - self.min) + self.min
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }
}

/// Per-channel min-max scaling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub level: ChannelRange,
    pub rainfall: ChannelRange,
}

impl ScalerParams {
    pub fn new(level: ChannelRange, rainfall: ChannelRange) -> Result<Self, TimeSeriesError> {
        level.validate(Channel::Level)?;
        rainfall.validate(Channel::Rainfall)?;
        Ok(Self { level, rainfall })
    }

    pub fn channel(&self, channel: Channel) -> &ChannelRange {
        match channel {
            Channel::Level => &self.level,
            Channel::Rainfall => &self.rainfall,
        }
    }

    pub fn apply_scale(&self, channel: Channel, values: &[f64]) -> Vec<f64> {
        let range = self.channel(channel);
        values.iter().map(|&v| range.apply(v)).collect()
    }

    pub fn invert_scale(&self, channel: Channel, values: &[f64]) -> Vec<f64> {
        let range = self.channel(channel);
        values.iter().map(|&v| range.invert(v)).collect()
    }
}

pub fn fit_scale(frame: &TimeSeriesFrame) -> Result<ScalerParams, TimeSeriesError> {
    Ok(ScalerParams {
        level: ChannelRange::fit(frame.level(), Channel::Level)?,
        rainfall: ChannelRange::fit(frame.rainfall(), Channel::Rainfall)?,
    })
}

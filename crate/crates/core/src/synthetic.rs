//! Seeded synthetic data: a sine memorization task and a rainfall-driven
//! wet-well level series.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::timeseries::{TimeSeriesError, TimeSeriesFrame};

/// `samples` windows of a sampled sine: `steps` consecutive values as inputs
/// and the following `horizon` values as targets, all in [-1, 1].
pub fn sine_task(samples: usize, steps: usize, horizon: usize) -> (Array2<f64>, Array2<f64>) {
    let dx = 0.3;
    let value = |k: usize| (dx * k as f64).sin();
    let inputs = Array2::from_shape_fn((samples, steps), |(i, j)| value(i + j));
    let targets = Array2::from_shape_fn((samples, horizon), |(i, j)| value(i + steps + j));
    (inputs, targets)
}

/// Parameters of the synthetic wet-well series.
///
/// Rain arrives in storms of random start, length and intensity. Effective
/// rain passes through two linear reservoirs in series and the wet-well
/// level rises in proportion to the outflow of the second one. Observed
/// levels carry multiplicative Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirSeriesConfig {
    pub records: usize,
    pub step_seconds: i64,
    pub start: i64,
    pub seed: u64,
    /// Per-step probability that a storm starts during dry weather.
    pub storm_probability: f64,
    /// Storm length range in steps, inclusive.
    pub storm_steps: (usize, usize),
    /// Mean storm intensity, mm/s.
    pub mean_intensity: f64,
    /// Reservoir constants in steps.
    pub k_fast: f64,
    pub k_slow: f64,
    /// Dry-weather level, m.
    pub base_level: f64,
    /// Level rise per mm/s of routed runoff, m.
    pub gain: f64,
    /// Relative noise standard deviation.
    pub noise: f64,
}

impl Default for ReservoirSeriesConfig {
    fn default() -> Self {
        Self {
            records: 10_000,
            step_seconds: crate::timeseries::DEFAULT_STEP_SECONDS,
            // 2020-01-01T00:00:00Z
            start: 1_577_836_800,
            seed: 7,
            storm_probability: 0.01,
            storm_steps: (4, 30),
            mean_intensity: 0.003,
            k_fast: 12.0,
            k_slow: 24.0,
            base_level: 2.0,
            gain: 900.0,
            noise: 0.01,
        }
    }
}

pub fn reservoir_series(cfg: &ReservoirSeriesConfig) -> Result<TimeSeriesFrame, TimeSeriesError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let intensity = Exp::new(1.0 / cfg.mean_intensity)
        .map_err(|e| TimeSeriesError::InvalidGenerator(format!("mean_intensity {}: {e}", cfg.mean_intensity)))?;
    let mut rainfall = vec![0.0; cfg.records];
    let mut t = 0;
    while t < cfg.records {
        if rng.random::<f64>() < cfg.storm_probability {
            let len = rng.random_range(cfg.storm_steps.0..=cfg.storm_steps.1);
            let peak: f64 = intensity.sample(&mut rng);
            for r in rainfall.iter_mut().skip(t).take(len) {
                *r = peak * rng.random_range(0.5..1.5);
            }
            t += len;
        } else {
            t += 1;
        }
    }

    let (k1, k2) = (cfg.k_fast.max(1.0), cfg.k_slow.max(1.0));
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut level = Vec::with_capacity(cfg.records);
    for &r in &rainfall {
        let q1 = s1 / k1;
        s1 += r - q1;
        let q2 = s2 / k2;
        s2 += q1 - q2;
        let clean = cfg.base_level + cfg.gain * q2;
        let eps: f64 = rng.sample(StandardNormal);
        level.push(clean * (1.0 + cfg.noise * eps));
    }
    TimeSeriesFrame::new("synthetic", cfg.start, cfg.step_seconds, level, rainfall)
}

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::timeseries::{format_timestamp, parse_timestamp};

/// Rainfall intensity series in mm/s at a fixed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Storm {
    pub start: i64,
    pub step_seconds: i64,
    pub intensity: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochasticStormConfig {
    pub seed: u64,
    pub steps: usize,
    pub step_seconds: i64,
    /// Per-step chance that a burst starts while dry.
    pub burst_probability: f64,
    /// Inclusive burst length range, steps.
    pub burst_steps: (usize, usize),
    /// Mean burst intensity, mm/s.
    pub mean_intensity: f64,
}

impl Default for StochasticStormConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            steps: 576,
            step_seconds: crate::timeseries::DEFAULT_STEP_SECONDS,
            burst_probability: 0.03,
            burst_steps: (2, 24),
            mean_intensity: 0.004,
        }
    }
}

impl Storm {
    pub fn new(start: i64, step_seconds: i64, intensity: Vec<f64>) -> Result<Self, SimError> {
        if step_seconds <= 0 {
            return Err(SimError::InvalidStorm(format!(
                "step must be positive, got {step_seconds}s"
            )));
        }
        if intensity.is_empty() {
            return Err(SimError::InvalidStorm("no rainfall values".into()));
        }
        if let Some((i, v)) = intensity
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(SimError::InvalidStorm(format!(
                "step {i}: intensity {v} is negative or not finite"
            )));
        }
        Ok(Self {
            start,
            step_seconds,
            intensity,
        })
    }

    pub fn dry(steps: usize, step_seconds: i64) -> Result<Self, SimError> {
        Self::new(0, step_seconds, vec![0.0; steps])
    }

    /// Constant `intensity` for `duration` steps between two dry spells.
    pub fn block(
        step_seconds: i64,
        dry_before: usize,
        duration: usize,
        intensity: f64,
        dry_after: usize,
    ) -> Result<Self, SimError> {
        let mut v = vec![0.0; dry_before];
        v.extend(std::iter::repeat_n(intensity, duration));
        v.extend(std::iter::repeat_n(0.0, dry_after));
        Self::new(0, step_seconds, v)
    }

    /// Linear rise to `peak` over `rise` steps and linear fall over `fall`.
    pub fn triangular(
        step_seconds: i64,
        dry_before: usize,
        rise: usize,
        fall: usize,
        peak: f64,
        dry_after: usize,
    ) -> Result<Self, SimError> {
        let mut v = vec![0.0; dry_before];
        v.extend((1..=rise).map(|k| peak * k as f64 / rise as f64));
        v.extend((1..=fall).map(|k| peak * (fall - k) as f64 / fall as f64));
        v.extend(std::iter::repeat_n(0.0, dry_after));
        Self::new(0, step_seconds, v)
    }

    /// Bursts of exponentially distributed intensity with ±50% per-step
    /// jitter, started at random.
    pub fn stochastic(cfg: &StochasticStormConfig) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&cfg.burst_probability)
            || cfg.burst_steps.0 == 0
            || cfg.burst_steps.0 > cfg.burst_steps.1
        {
            return Err(SimError::InvalidStorm(format!("bad burst settings {cfg:?}")));
        }
        let exp = Exp::new(1.0 / cfg.mean_intensity)
            .map_err(|e| SimError::InvalidStorm(format!("mean intensity {}: {e}", cfg.mean_intensity)))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut v = vec![0.0; cfg.steps];
        let mut t = 0;
        while t < cfg.steps {
            if rng.random::<f64>() < cfg.burst_probability {
                let len = rng.random_range(cfg.burst_steps.0..=cfg.burst_steps.1);
                let level: f64 = exp.sample(&mut rng);
                for x in v.iter_mut().skip(t).take(len) {
                    *x = level * rng.random_range(0.5..1.5);
                }
                t += len;
            } else {
                t += 1;
            }
        }
        Self::new(0, cfg.step_seconds, v)
    }

    pub fn len(&self) -> usize {
        self.intensity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensity.is_empty()
    }

    /// Total depth, mm.
    pub fn depth(&self) -> f64 {
        self.intensity.iter().sum::<f64>() * self.step_seconds as f64
    }

    /// Reads `timestamp,rainfall_mm_s`. A full `timestamp,level_m,rainfall_mm_s`
    /// series is accepted too and its level column ignored.
    pub fn parse_csv(text: &str) -> Result<Self, SimError> {
        let mut rd = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rd.headers()?.clone();
        let find = |names: &[&str]| headers.iter().position(|h| names.contains(&h));
        let (Some(tc), Some(rc)) = (find(&["timestamp"]), find(&["rainfall_mm_s", "rainfall"])) else {
            return Err(SimError::InvalidStorm(format!(
                "expected `timestamp` and `rainfall_mm_s` columns, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        };
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (k, rec) in rd.records().enumerate() {
            let rec = rec?;
            let line = k + 2;
            let t = parse_timestamp(rec.get(tc).unwrap_or(""))
                .ok_or_else(|| SimError::InvalidStorm(format!("line {line}: bad timestamp")))?;
            let v: f64 = rec
                .get(rc)
                .unwrap_or("")
                .parse()
                .map_err(|_| SimError::InvalidStorm(format!("line {line}: bad rainfall value")))?;
            times.push(t);
            values.push(v);
        }
        if times.len() < 2 {
            return Err(SimError::InvalidStorm(
                "need at least two rows to infer the step".into(),
            ));
        }
        let step = times[1] - times[0];
        if let Some(k) = times.windows(2).position(|w| w[1] - w[0] != step) {
            return Err(SimError::InvalidStorm(format!("line {}: irregular step", k + 3)));
        }
        Self::new(times[0], step, values)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        Self::parse_csv(&std::fs::read_to_string(path)?)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["timestamp", "rainfall_mm_s"])?;
        for (i, v) in self.intensity.iter().enumerate() {
            let t = self.start + i as i64 * self.step_seconds;
            w.write_record([format_timestamp(t), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

//! Forecast skill: RMSE, Nash–Sutcliffe efficiency and R², plus a
//! per-lead evaluation report.

use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forecaster::Forecaster;
use crate::timeseries::SupervisedWindowSet;

/// Lead times (steps) reported by default: 20 min … 2 h at 5-minute steps.
pub const DEFAULT_LEADS: [usize; 6] = [4, 8, 12, 16, 20, 24];

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("observed has {obs} values but simulated has {sim}")]
    LengthMismatch { obs: usize, sim: usize },
    #[error("empty series")]
    Empty,
    #[error("non-finite value in series")]
    NonFinite,
    #[error("observations are constant; NSE denominator is zero")]
    ConstantObservations,
    #[error("series is constant; correlation undefined")]
    ConstantSeries,
    #[error("lead {lead} exceeds model horizon {horizon}")]
    MissingLead { lead: usize, horizon: usize },
    #[error("model `{model}` expects {expected} inputs, windows have {actual}")]
    InputMismatch {
        model: String,
        expected: usize,
        actual: usize,
    },
}

fn check(obs: &[f64], sim: &[f64]) -> Result<(), MetricError> {
    if obs.len() != sim.len() {
        return Err(MetricError::LengthMismatch {
            obs: obs.len(),
            sim: sim.len(),
        });
    }
    if obs.is_empty() {
        return Err(MetricError::Empty);
    }
    if obs.iter().chain(sim).any(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sum_sq_err(obs: &[f64], sim: &[f64]) -> f64 {
    obs.iter().zip(sim).map(|(o, s)| (o - s).powi(2)).sum()
}

pub fn rmse(obs: &[f64], sim: &[f64]) -> Result<f64, MetricError> {
    check(obs, sim)?;
    Ok((sum_sq_err(obs, sim) / obs.len() as f64).sqrt())
}

pub fn nse(obs: &[f64], sim: &[f64]) -> Result<f64, MetricError> {
    check(obs, sim)?;
    let m = mean(obs);
    let denom: f64 = obs.iter().map(|o| (o - m).powi(2)).sum();
    if denom == 0.0 {
        return Err(MetricError::ConstantObservations);
    }
    Ok(1.0 - sum_sq_err(obs, sim) / denom)
}

/// Squared Pearson correlation between observed and simulated values.
pub fn r_squared(obs: &[f64], sim: &[f64]) -> Result<f64, MetricError> {
    check(obs, sim)?;
    let mo = mean(obs);
    let ms = mean(sim);
    let (mut cov, mut vo, mut vs) = (0.0, 0.0, 0.0);
    for (o, s) in obs.iter().zip(sim) {
        let (a, b) = (o - mo, s - ms);
        cov += a * b;
        vo += a * a;
        vs += b * b;
    }
    if vo == 0.0 || vs == 0.0 {
        return Err(MetricError::ConstantSeries);
    }
    Ok(((cov * cov) / (vs * vo)).clamp(0.0, 1.0))
}

/// RMSE/NSE/R² of one lead for one model, in meters and in scaled units.
/// A metric that is undefined for the data (e.g. NSE on a constant
/// observation column) is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub lead_steps: usize,
    pub model: String,
    pub rmse_m: Option<f64>,
    pub nse: Option<f64>,
    pub r2: Option<f64>,
    pub rmse_scaled: Option<f64>,
    pub nse_scaled: Option<f64>,
    pub r2_scaled: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub cells: Vec<ReportCell>,
}

impl EvaluationReport {
    pub fn cell(&self, lead: usize, model: &str) -> Option<&ReportCell> {
        self.cells.iter().find(|c| c.lead_steps == lead && c.model == model)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "lead_steps",
            "model",
            "rmse_m",
            "nse",
            "r2",
            "rmse_scaled",
            "nse_scaled",
            "r2_scaled",
        ])?;
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            w.write_record([
                c.lead_steps.to_string(),
                c.model.clone(),
                fmt(c.rmse_m),
                fmt(c.nse),
                fmt(c.r2),
                fmt(c.rmse_scaled),
                fmt(c.nse_scaled),
                fmt(c.r2_scaled),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Metrics for one lead column, pooled over all rows.
pub fn score_column(
    lead: usize,
    model: &str,
    obs_scaled: &[f64],
    sim_scaled: &[f64],
    invert: impl Fn(f64) -> f64,
) -> ReportCell {
    let obs_m: Vec<f64> = obs_scaled.iter().map(|&v| invert(v)).collect();
    let sim_m: Vec<f64> = sim_scaled.iter().map(|&v| invert(v)).collect();
    ReportCell {
        lead_steps: lead,
        model: model.to_string(),
        rmse_m: rmse(&obs_m, &sim_m).ok(),
        nse: nse(&obs_m, &sim_m).ok(),
        r2: r_squared(&obs_m, &sim_m).ok(),
        rmse_scaled: rmse(obs_scaled, sim_scaled).ok(),
        nse_scaled: nse(obs_scaled, sim_scaled).ok(),
        r2_scaled: r_squared(obs_scaled, sim_scaled).ok(),
    }
}

/// Evaluates each model on its own test windows at the given leads.
///
/// Rows are ordered lead-major, then in model order, like the per-lead
/// blocks of a comparison table.
pub fn evaluate(
    models: &[(&dyn Forecaster, &SupervisedWindowSet)],
    leads: &[usize],
) -> Result<EvaluationReport, MetricError> {
    let mut predictions: Vec<Array2<f64>> = Vec::with_capacity(models.len());
    for (model, windows) in models {
        if model.input_dim() != windows.input_dim() {
            return Err(MetricError::InputMismatch {
                model: model.name(),
                expected: model.input_dim(),
                actual: windows.input_dim(),
            });
        }
        let horizon = model.horizon().min(windows.horizon);
        if let Some(&lead) = leads.iter().find(|&&l| l == 0 || l > horizon) {
            return Err(MetricError::MissingLead { lead, horizon });
        }
        predictions.push(model.predict(&windows.inputs));
    }
    let mut report = EvaluationReport::default();
    for &lead in leads {
        for ((model, windows), pred) in models.iter().zip(&predictions) {
            let obs = windows.targets.column(lead - 1).to_vec();
            let sim = pred.column(lead - 1).to_vec();
            let range = windows.scaler.level;
            report
                .cells
                .push(score_column(lead, &model.name(), &obs, &sim, |v| range.invert(v)));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pair(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        let n = rng.random_range(2..200);
        let obs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let sim: Vec<f64> = obs.iter().map(|o| o + rng.random_range(-2.0..2.0)).collect();
        (obs, sim)
    }

    #[test]
    fn hand_values() {
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 0.0);
        let obs = [1.0, 2.0, 4.0, 7.0];
        assert_eq!(nse(&obs, &obs).unwrap(), 1.0);
        assert_eq!(nse(&obs, &[3.5; 4]).unwrap(), 0.0);
        assert_eq!(r_squared(&obs, &obs).unwrap(), 1.0);
        let affine: Vec<f64> = obs.iter().map(|o| 2.0 * o + 3.0).collect();
        assert!((r_squared(&obs, &affine).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn errors_are_explicit() {
        assert_eq!(nse(&[2.0; 3], &[1.0, 2.0, 3.0]), Err(MetricError::ConstantObservations));
        assert_eq!(rmse(&[], &[]), Err(MetricError::Empty));
        assert!(matches!(
            rmse(&[1.0], &[1.0, 2.0]),
            Err(MetricError::LengthMismatch { .. })
        ));
        assert_eq!(r_squared(&[1.0, 2.0], &[5.0, 5.0]), Err(MetricError::ConstantSeries));
        assert_eq!(rmse(&[f64::NAN], &[1.0]), Err(MetricError::NonFinite));
    }

    #[test]
    fn orthogonal_simulation_has_zero_r2() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let (obs, raw) = random_pair(&mut rng);
            // Gram–Schmidt against the centered observations
            let mo = obs.iter().sum::<f64>() / obs.len() as f64;
            let mr = raw.iter().sum::<f64>() / raw.len() as f64;
            let co: Vec<f64> = obs.iter().map(|o| o - mo).collect();
            let cr: Vec<f64> = raw.iter().map(|r| r - mr).collect();
            let proj = co.iter().zip(&cr).map(|(a, b)| a * b).sum::<f64>() / co.iter().map(|a| a * a).sum::<f64>();
            let sim: Vec<f64> = cr.iter().zip(&co).map(|(r, o)| r - proj * o + 5.0).collect();
            assert!(r_squared(&obs, &sim).unwrap() < 1e-12);
        }
    }

    #[test]
    fn nse_rmse_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let (obs, sim) = random_pair(&mut rng);
            let m = obs.iter().sum::<f64>() / obs.len() as f64;
            let ss: f64 = obs.iter().map(|o| (o - m).powi(2)).sum();
            let r = rmse(&obs, &sim).unwrap();
            let via_rmse = 1.0 - r * r * obs.len() as f64 / ss;
            assert!((nse(&obs, &sim).unwrap() - via_rmse).abs() < 1e-12);
        }
    }

    #[test]
    fn r2_affine_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let (obs, sim) = random_pair(&mut rng);
            let slope = rng.random_range(0.1..10.0);
            let shift = rng.random_range(-5.0..5.0);
            let moved: Vec<f64> = sim.iter().map(|s| slope * s + shift).collect();
            let a = r_squared(&obs, &sim).unwrap();
            let b = r_squared(&obs, &moved).unwrap();
            assert!((a - b).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&a));
            assert!(nse(&obs, &sim).unwrap() <= 1.0);
        }
    }
}

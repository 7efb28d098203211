//! Normalized sample correlation functions.
//!
//! Both functions use the biased estimator: sums are divided by the full
//! series length rather than by the number of overlapping pairs, and the
//! result is normalized by the lag-0 product so values stay in `[-1, 1]`.

use super::TimeSeriesError;

fn centered(series: &[f64]) -> Vec<f64> {
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    series.iter().map(|v| v - mean).collect()
}

fn check_len(len: usize, max_lag: usize) -> Result<(), TimeSeriesError> {
    if len > max_lag {
        Ok(())
    } else {
        Err(TimeSeriesError::TooShort {
            needed: max_lag + 1,
            actual: len,
        })
    }
}

/// Autocorrelation at lags `0..=max_lag`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>, TimeSeriesError> {
    cross_correlation(series, series, max_lag)
}

/// Correlation of `a` at time `t` with `b` at time `t - lag`, for `lag` in
/// `0..=max_lag`. With `a` = level and `b` = rainfall, lag `k` measures how
/// rainfall `k` steps ago relates to the current level.
pub fn cross_correlation(a: &[f64], b: &[f64], max_lag: usize) -> Result<Vec<f64>, TimeSeriesError> {
    if a.len() != b.len() {
        return Err(TimeSeriesError::LengthMismatch {
            level: a.len(),
            rainfall: b.len(),
        });
    }
    check_len(a.len(), max_lag)?;
    let ca = centered(a);
    let cb = centered(b);
    let norm = (ca.iter().map(|v| v * v).sum::<f64>() * cb.iter().map(|v| v * v).sum::<f64>()).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(TimeSeriesError::ConstantSeries);
    }
    Ok((0..=max_lag)
        .map(|lag| {
            let s: f64 = ca[lag..].iter().zip(&cb).map(|(x, y)| x * y).sum();
            (s / norm).clamp(-1.0, 1.0)
        })
        .collect())
}

use std::fs;
use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::frame::format_timestamp;
use super::{fit_scale, Channel, LagSelection, ScalerParams, TimeSeriesError, TimeSeriesFrame};

pub const DEFAULT_HORIZON: usize = 24;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.75;

/// Supervised (lagged inputs → next `horizon` levels) pairs.
///
/// Row `i` has reference instant `t = reference_index[i]`. Its inputs are the
/// scaled level at `t - lag` for each level lag followed by the scaled
/// rainfall at `t - lag` for each rainfall lag; its targets are the scaled
/// level at `t + 1 ..= t + horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedWindowSet {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
    pub reference_index: Vec<usize>,
    pub reference_time: Vec<i64>,
    pub scaler: ScalerParams,
    pub lag_selection: LagSelection,
    pub horizon: usize,
    pub step_seconds: i64,
}

/// Column meaning of a flat input row.
pub fn input_columns(lags: &LagSelection) -> Vec<(Channel, usize)> {
    lags.level_lags
        .iter()
        .map(|&l| (Channel::Level, l))
        .chain(lags.rainfall_lags.iter().map(|&l| (Channel::Rainfall, l)))
        .collect()
}

/// Scaled input row for reference instant `t` (requires `t >= max_lag`).
pub fn input_row(
    frame: &TimeSeriesFrame,
    lags: &LagSelection,
    scaler: &ScalerParams,
    t: usize,
) -> Result<Vec<f64>, TimeSeriesError> {
    if t < lags.max_lag || t >= frame.len() {
        return Err(TimeSeriesError::TooShort {
            needed: lags.max_lag + 1,
            actual: t + 1,
        });
    }
    Ok(input_columns(lags)
        .into_iter()
        .map(|(channel, lag)| match channel {
            Channel::Level => scaler.level.apply(frame.level()[t - lag]),
            Channel::Rainfall => scaler.rainfall.apply(frame.rainfall()[t - lag]),
        })
        .collect())
}

/// Number of window rows a frame of `len` yields.
pub fn window_count(len: usize, max_lag: usize, horizon: usize) -> Option<usize> {
    len.checked_sub(max_lag + horizon).filter(|&n| n > 0)
}

pub fn make_windows(
    frame: &TimeSeriesFrame,
    lags: &LagSelection,
    horizon: usize,
    scaler: &ScalerParams,
) -> Result<SupervisedWindowSet, TimeSeriesError> {
    lags.validate()?;
    if horizon == 0 {
        return Err(TimeSeriesError::InvalidHorizon);
    }
    let n = window_count(frame.len(), lags.max_lag, horizon).ok_or(TimeSeriesError::TooShort {
        needed: lags.max_lag + horizon + 1,
        actual: frame.len(),
    })?;
    let d = lags.input_dim();
    let level: Vec<f64> = scaler.apply_scale(Channel::Level, frame.level());
    let rain: Vec<f64> = scaler.apply_scale(Channel::Rainfall, frame.rainfall());
    let columns = input_columns(lags);

    let mut inputs = Array2::zeros((n, d));
    let mut targets = Array2::zeros((n, horizon));
    let mut reference_index = Vec::with_capacity(n);
    for i in 0..n {
        let t = lags.max_lag + i;
        for (j, &(channel, lag)) in columns.iter().enumerate() {
            inputs[[i, j]] = match channel {
                Channel::Level => level[t - lag],
                Channel::Rainfall => rain[t - lag],
            };
        }
        for k in 0..horizon {
            targets[[i, k]] = level[t + 1 + k];
        }
        reference_index.push(t);
    }
    let reference_time = reference_index.iter().map(|&t| frame.timestamp(t)).collect();
    Ok(SupervisedWindowSet {
        inputs,
        targets,
        reference_index,
        reference_time,
        scaler: *scaler,
        lag_selection: lags.clone(),
        horizon,
        step_seconds: frame.step_seconds(),
    })
}

/// Training-side row count: `floor(n * fraction)`, clamped to `[1, n - 1]`.
pub fn split_point(n: usize, train_fraction: f64) -> Result<usize, TimeSeriesError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(TimeSeriesError::InvalidFraction(train_fraction));
    }
    if n < 2 {
        return Err(TimeSeriesError::TooShort { needed: 2, actual: n });
    }
    let k = (n as f64 * train_fraction).floor() as usize;
    Ok(k.clamp(1, n - 1))
}

impl SupervisedWindowSet {
    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    /// Rows `[from, to)`.
    pub fn rows(&self, from: usize, to: usize) -> Self {
        Self {
            inputs: self.inputs.slice(ndarray::s![from..to, ..]).to_owned(),
            targets: self.targets.slice(ndarray::s![from..to, ..]).to_owned(),
            reference_index: self.reference_index[from..to].to_vec(),
            reference_time: self.reference_time[from..to].to_vec(),
            scaler: self.scaler,
            lag_selection: self.lag_selection.clone(),
            horizon: self.horizon,
            step_seconds: self.step_seconds,
        }
    }

    /// Splits by row order; training rows all precede test rows.
    pub fn chronological_split(&self, train_fraction: f64) -> Result<(Self, Self), TimeSeriesError> {
        let k = split_point(self.len(), train_fraction)?;
        Ok((self.rows(0, k), self.rows(k, self.len())))
    }

    /// Unscaled level targets (meters).
    pub fn targets_unscaled(&self) -> Array2<f64> {
        let range = self.scaler.level;
        self.targets.mapv(|v| range.invert(v))
    }

    pub fn select_rows(&self, idx: &[usize]) -> (Array2<f64>, Array2<f64>) {
        (self.inputs.select(Axis(0), idx), self.targets.select(Axis(0), idx))
    }

    /// Writes `inputs.csv`, `targets.csv` and `windows.json` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<(), TimeSeriesError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| TimeSeriesError::Io(e.to_string()))?;
        let input_header: Vec<String> = input_columns(&self.lag_selection)
            .into_iter()
            .map(|(c, l)| format!("{}_lag{l}", c.name()))
            .collect();
        let target_header: Vec<String> = (1..=self.horizon).map(|k| format!("lead{k}")).collect();
        write_matrix(
            &dir.join("inputs.csv"),
            &input_header,
            &self.reference_time,
            &self.inputs,
        )?;
        write_matrix(
            &dir.join("targets.csv"),
            &target_header,
            &self.reference_time,
            &self.targets,
        )?;
        let sidecar = WindowSidecar {
            scaler: self.scaler,
            lag_selection: self.lag_selection.clone(),
            horizon: self.horizon,
            step_seconds: self.step_seconds,
            rows: self.len(),
            first_reference_index: self.reference_index.first().copied().unwrap_or(0),
        };
        let json = serde_json::to_string_pretty(&sidecar).map_err(|e| TimeSeriesError::Io(e.to_string()))?;
        fs::write(dir.join("windows.json"), json).map_err(|e| TimeSeriesError::Io(e.to_string()))
    }

    /// Reads back a directory written by [`SupervisedWindowSet::write_dir`].
    pub fn read_dir(dir: impl AsRef<Path>) -> Result<Self, TimeSeriesError> {
        let dir = dir.as_ref();
        let json = fs::read_to_string(dir.join("windows.json")).map_err(|e| TimeSeriesError::Io(e.to_string()))?;
        let sidecar: WindowSidecar = serde_json::from_str(&json).map_err(|e| TimeSeriesError::Io(e.to_string()))?;
        let (times, inputs) = read_matrix(&dir.join("inputs.csv"))?;
        let (_, targets) = read_matrix(&dir.join("targets.csv"))?;
        if inputs.nrows() != sidecar.rows || targets.ncols() != sidecar.horizon {
            return Err(TimeSeriesError::Io("window files disagree with windows.json".into()));
        }
        Ok(Self {
            inputs,
            targets,
            reference_index: (0..sidecar.rows).map(|i| sidecar.first_reference_index + i).collect(),
            reference_time: times,
            scaler: sidecar.scaler,
            lag_selection: sidecar.lag_selection,
            horizon: sidecar.horizon,
            step_seconds: sidecar.step_seconds,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct WindowSidecar {
    scaler: ScalerParams,
    lag_selection: LagSelection,
    horizon: usize,
    step_seconds: i64,
    rows: usize,
    first_reference_index: usize,
}

fn write_matrix(path: &Path, header: &[String], times: &[i64], m: &Array2<f64>) -> Result<(), TimeSeriesError> {
    let io = |e: csv::Error| TimeSeriesError::Io(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut head = vec!["timestamp".to_string()];
    head.extend_from_slice(header);
    w.write_record(&head).map_err(io)?;
    for (row, &t) in m.rows().into_iter().zip(times) {
        let mut rec = vec![format_timestamp(t)];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| TimeSeriesError::Io(e.to_string()))
}

fn read_matrix(path: &Path) -> Result<(Vec<i64>, Array2<f64>), TimeSeriesError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| TimeSeriesError::Io(e.to_string()))?;
    let cols = r.headers().map_err(|e| TimeSeriesError::Io(e.to_string()))?.len() - 1;
    let mut times = Vec::new();
    let mut data = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| TimeSeriesError::Io(e.to_string()))?;
        let line = i + 2;
        times.push(super::frame::parse_timestamp(&rec[0]).ok_or(TimeSeriesError::Parse {
            line,
            message: "bad timestamp".into(),
        })?);
        for f in rec.iter().skip(1) {
            data.push(f.parse::<f64>().map_err(|_| TimeSeriesError::Parse {
                line,
                message: format!("bad value `{f}`"),
            })?);
        }
    }
    let m = Array2::from_shape_vec((times.len(), cols), data).map_err(|e| TimeSeriesError::Io(e.to_string()))?;
    Ok((times, m))
}

/// Windows with the scaler fit on the training portion only, already split.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub train: SupervisedWindowSet,
    pub test: SupervisedWindowSet,
    pub scaler: ScalerParams,
}

pub fn prepare_dataset(
    frame: &TimeSeriesFrame,
    lags: &LagSelection,
    horizon: usize,
    train_fraction: f64,
) -> Result<PreparedDataset, TimeSeriesError> {
    let n = window_count(frame.len(), lags.max_lag, horizon).ok_or(TimeSeriesError::TooShort {
        needed: lags.max_lag + horizon + 1,
        actual: frame.len(),
    })?;
    let n_train = split_point(n, train_fraction)?;
    // last training row references t = max_lag + n_train - 1 and reads up to t + horizon
    let covered = lags.max_lag + n_train + horizon;
    let scaler = fit_scale(&frame.slice(0, covered)?)?;
    let all = make_windows(frame, lags, horizon, &scaler)?;
    Ok(PreparedDataset {
        train: all.rows(0, n_train),
        test: all.rows(n_train, n),
        scaler,
    })
}

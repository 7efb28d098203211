use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::rbf;
use super::smo::{solve, SmoConfig};
use super::{SvrError, SvrHyperparams};
use crate::forecaster::Forecaster;
use crate::timeseries::{LagSelection, ScalerParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: usize,
    pub violation: f64,
    pub support_vectors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawModel {
    hyper: SvrHyperparams,
    input_dim: usize,
    indices: Vec<usize>,
    support_vectors: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
    intercept: f64,
}

/// One fitted ε-SVR. Support vectors are kept sorted by their training-row
/// index, which fixes the summation order of every prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct SvrModel {
    hyper: SvrHyperparams,
    input_dim: usize,
    indices: Vec<usize>,
    support_vectors: Array2<f64>,
    coefficients: Vec<f64>,
    intercept: f64,
}

impl SvrModel {
    /// Builds a model from parts, in any storage order.
    pub fn new(
        hyper: SvrHyperparams,
        input_dim: usize,
        indices: Vec<usize>,
        support_vectors: Vec<Vec<f64>>,
        coefficients: Vec<f64>,
        intercept: f64,
    ) -> Result<Self, SvrError> {
        Self::try_from(RawModel {
            hyper,
            input_dim,
            indices,
            support_vectors,
            coefficients,
            intercept,
        })
    }

    pub fn fit(
        inputs: ArrayView2<f64>,
        targets: &[f64],
        hyper: &SvrHyperparams,
        config: &SmoConfig,
    ) -> Result<(Self, FitReport), SvrError> {
        let sol = solve(inputs, targets, hyper, config)?;
        let keep: Vec<usize> = (0..inputs.nrows()).filter(|&k| sol.coefficients[k] != 0.0).collect();
        let report = FitReport {
            iterations: sol.iterations,
            violation: sol.violation,
            support_vectors: keep.len(),
        };
        let model = Self {
            hyper: *hyper,
            input_dim: inputs.ncols(),
            support_vectors: inputs.select(ndarray::Axis(0), &keep),
            coefficients: keep.iter().map(|&k| sol.coefficients[k]).collect(),
            indices: keep,
            intercept: sol.intercept,
        };
        Ok((model, report))
    }

    pub fn hyper(&self) -> &SvrHyperparams {
        &self.hyper
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    /// `α_i - α*_i` per support vector.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn support_indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn support_vectors(&self) -> ArrayView2<'_, f64> {
        self.support_vectors.view()
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<f64, SvrError> {
        if x.len() != self.input_dim {
            return Err(SvrError::DimensionMismatch {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        Ok(self.eval(x))
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (sv, a) in self.support_vectors.rows().into_iter().zip(&self.coefficients) {
            s += a * rbf(sv.as_slice().expect("standard layout"), x, self.hyper.gamma);
        }
        s + self.intercept
    }

    pub fn predict(&self, inputs: ArrayView2<f64>) -> Result<Vec<f64>, SvrError> {
        if inputs.ncols() != self.input_dim {
            return Err(SvrError::DimensionMismatch {
                expected: self.input_dim,
                actual: inputs.ncols(),
            });
        }
        let inputs = inputs.as_standard_layout();
        Ok(inputs
            .rows()
            .into_iter()
            .map(|r| self.eval(r.as_slice().expect("standard layout")))
            .collect())
    }
}

impl TryFrom<RawModel> for SvrModel {
    type Error = SvrError;

    fn try_from(raw: RawModel) -> Result<Self, SvrError> {
        raw.hyper.validate()?;
        let m = raw.indices.len();
        if raw.support_vectors.len() != m || raw.coefficients.len() != m {
            return Err(SvrError::Malformed(format!(
                "{m} indices, {} support vectors, {} coefficients",
                raw.support_vectors.len(),
                raw.coefficients.len()
            )));
        }
        if let Some(sv) = raw.support_vectors.iter().find(|sv| sv.len() != raw.input_dim) {
            return Err(SvrError::DimensionMismatch {
                expected: raw.input_dim,
                actual: sv.len(),
            });
        }
        let bound = raw.hyper.c * (1.0 + 1e-12);
        if raw.coefficients.iter().any(|a| a.is_nan() || a.abs() > bound) || !raw.intercept.is_finite() {
            return Err(SvrError::Malformed(
                "dual coefficient outside [-C, C] or non-finite intercept".into(),
            ));
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&k| raw.indices[k]);
        if order.windows(2).any(|w| raw.indices[w[0]] == raw.indices[w[1]]) {
            return Err(SvrError::Malformed("duplicate support-vector index".into()));
        }
        let mut flat = Vec::with_capacity(m * raw.input_dim);
        for &k in &order {
            flat.extend_from_slice(&raw.support_vectors[k]);
        }
        Ok(Self {
            hyper: raw.hyper,
            input_dim: raw.input_dim,
            indices: order.iter().map(|&k| raw.indices[k]).collect(),
            support_vectors: Array2::from_shape_vec((m, raw.input_dim), flat).expect("sized above"),
            coefficients: order.iter().map(|&k| raw.coefficients[k]).collect(),
            intercept: raw.intercept,
        })
    }
}

impl From<SvrModel> for RawModel {
    fn from(m: SvrModel) -> Self {
        Self {
            hyper: m.hyper,
            input_dim: m.input_dim,
            support_vectors: m.support_vectors.rows().into_iter().map(|r| r.to_vec()).collect(),
            indices: m.indices,
            coefficients: m.coefficients,
            intercept: m.intercept,
        }
    }
}

/// One SVR per lead step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrForecaster {
    pub models: Vec<SvrModel>,
    pub reports: Vec<FitReport>,
    pub scaler: Option<ScalerParams>,
    pub lags: Option<LagSelection>,
}

impl SvrForecaster {
    /// Fits the columns of `targets` independently (in parallel when
    /// threads are available).
    pub fn fit(
        inputs: ArrayView2<f64>,
        targets: ArrayView2<f64>,
        hyper: &SvrHyperparams,
        config: &SmoConfig,
    ) -> Result<Self, SvrError> {
        if targets.nrows() != inputs.nrows() || targets.ncols() == 0 {
            return Err(SvrError::DimensionMismatch {
                expected: inputs.nrows(),
                actual: targets.nrows(),
            });
        }
        let fits: Vec<(SvrModel, FitReport)> = (0..targets.ncols())
            .into_par_iter()
            .map(|h| SvrModel::fit(inputs, &targets.column(h).to_vec(), hyper, config))
            .collect::<Result<_, _>>()?;
        let (models, reports) = fits.into_iter().unzip();
        Ok(Self {
            models,
            reports,
            scaler: None,
            lags: None,
        })
    }

    pub fn with_data(mut self, scaler: ScalerParams, lags: LagSelection) -> Self {
        self.scaler = Some(scaler);
        self.lags = Some(lags);
        self
    }

    pub fn predict_all(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>, SvrError> {
        let cols: Vec<Vec<f64>> = self
            .models
            .par_iter()
            .map(|m| m.predict(inputs))
            .collect::<Result<_, _>>()?;
        Ok(Array2::from_shape_fn((inputs.nrows(), cols.len()), |(r, h)| cols[h][r]))
    }

    pub fn to_json(&self) -> Result<String, SvrError> {
        serde_json::to_string_pretty(self).map_err(|e| SvrError::Malformed(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, SvrError> {
        let f: Self = serde_json::from_str(text).map_err(|e| SvrError::Malformed(e.to_string()))?;
        if f.models.is_empty() || f.models.iter().any(|m| m.input_dim != f.models[0].input_dim) {
            return Err(SvrError::Malformed("no models or inconsistent input widths".into()));
        }
        Ok(f)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SvrError> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| SvrError::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SvrError> {
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| SvrError::Io(e.to_string()))?)
    }
}

impl Forecaster for SvrForecaster {
    fn name(&self) -> String {
        "SVR".into()
    }

    fn input_dim(&self) -> usize {
        self.models[0].input_dim
    }

    fn horizon(&self) -> usize {
        self.models.len()
    }

    fn predict(&self, inputs: &Array2<f64>) -> Array2<f64> {
        self.predict_all(inputs.view()).expect("input width checked by caller")
    }
}

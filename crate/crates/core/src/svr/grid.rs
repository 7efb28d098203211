use std::io::Write;

use ndarray::{s, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::SvrModel;
use super::smo::SmoConfig;
use super::{SvrError, SvrHyperparams};
use crate::metrics::DEFAULT_LEADS;
use crate::timeseries::split_point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchSpec {
    pub gammas: Vec<f64>,
    pub cs: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Trailing share of the rows held out for scoring.
    pub validation_fraction: f64,
    /// 1-based lead steps whose models are fitted and scored.
    pub leads: Vec<usize>,
}

impl Default for GridSearchSpec {
    fn default() -> Self {
        Self {
            gammas: vec![0.05, 0.1, 0.5, 1.0, 2.0],
            cs: vec![0.5, 1.0, 5.0, 10.0, 50.0],
            epsilons: vec![0.005, 0.01, 0.05, 0.1],
            validation_fraction: 0.2,
            leads: DEFAULT_LEADS.to_vec(),
        }
    }
}

impl GridSearchSpec {
    pub fn single(hyper: SvrHyperparams, leads: Vec<usize>) -> Self {
        Self {
            gammas: vec![hyper.gamma],
            cs: vec![hyper.c],
            epsilons: vec![hyper.epsilon],
            leads,
            ..Default::default()
        }
    }

    pub fn cells(&self) -> Vec<SvrHyperparams> {
        let mut out = Vec::with_capacity(self.gammas.len() * self.cs.len() * self.epsilons.len());
        for &gamma in &self.gammas {
            for &c in &self.cs {
                for &epsilon in &self.epsilons {
                    out.push(SvrHyperparams { gamma, c, epsilon });
                }
            }
        }
        out
    }

    pub fn validate(&self, horizon: usize) -> Result<(), SvrError> {
        if self.gammas.is_empty() || self.cs.is_empty() || self.epsilons.is_empty() || self.leads.is_empty() {
            return Err(SvrError::EmptyGrid);
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(SvrError::InvalidHyperparams(format!(
                "validation fraction must be in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        if let Some(&l) = self.leads.iter().find(|&&l| l == 0 || l > horizon) {
            return Err(SvrError::InvalidHyperparams(format!("lead {l} outside 1..={horizon}")));
        }
        self.cells().iter().try_for_each(SvrHyperparams::validate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub hyper: SvrHyperparams,
    /// RMSE pooled over the scored leads; infinite if a fit failed.
    pub val_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    pub best: SvrHyperparams,
    pub best_rmse: f64,
}

impl GridResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SvrError> {
        let io = |e: csv::Error| SvrError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["gamma", "C", "epsilon", "val_rmse"]).map_err(io)?;
        for c in &self.cells {
            w.write_record([
                c.hyper.gamma.to_string(),
                c.hyper.c.to_string(),
                c.hyper.epsilon.to_string(),
                c.val_rmse.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| SvrError::Io(e.to_string()))
    }
}

/// Validation RMSE of one cell over the chosen lead columns.
pub fn score_cell(
    fit_x: ArrayView2<f64>,
    fit_y: ArrayView2<f64>,
    val_x: ArrayView2<f64>,
    val_y: ArrayView2<f64>,
    hyper: &SvrHyperparams,
    leads: &[usize],
    config: &SmoConfig,
) -> Result<f64, SvrError> {
    let mut sq = 0.0;
    for &lead in leads {
        let col = lead - 1;
        let (model, _) = SvrModel::fit(fit_x, &fit_y.column(col).to_vec(), hyper, config)?;
        let pred = model.predict(val_x)?;
        sq += pred
            .iter()
            .zip(val_y.column(col))
            .map(|(p, o)| (p - o) * (p - o))
            .sum::<f64>();
    }
    Ok((sq / (leads.len() * val_x.nrows()) as f64).sqrt())
}

/// Exhaustive search on a chronological split of `(inputs, targets)`.
///
/// Equal scores are resolved towards smaller `C`, then larger `ε`, then
/// smaller `γ`.
pub fn grid_search(
    spec: &GridSearchSpec,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    config: &SmoConfig,
) -> Result<GridResult, SvrError> {
    spec.validate(targets.ncols())?;
    if inputs.nrows() != targets.nrows() {
        return Err(SvrError::DimensionMismatch {
            expected: inputs.nrows(),
            actual: targets.nrows(),
        });
    }
    let cut = split_point(inputs.nrows(), 1.0 - spec.validation_fraction)
        .map_err(|e| SvrError::InvalidHyperparams(e.to_string()))?;
    let (fit_x, val_x) = (inputs.slice(s![..cut, ..]), inputs.slice(s![cut.., ..]));
    let (fit_y, val_y) = (targets.slice(s![..cut, ..]), targets.slice(s![cut.., ..]));

    let cells: Vec<GridCell> = spec
        .cells()
        .into_par_iter()
        .map(|hyper| GridCell {
            hyper,
            val_rmse: score_cell(fit_x, fit_y, val_x, val_y, &hyper, &spec.leads, config)
                .ok()
                .filter(|r| r.is_finite())
                .unwrap_or(f64::INFINITY),
        })
        .collect();

    let best = cells
        .iter()
        .filter(|c| c.val_rmse.is_finite())
        .min_by(|a, b| {
            a.val_rmse
                .total_cmp(&b.val_rmse)
                .then(a.hyper.c.total_cmp(&b.hyper.c))
                .then(b.hyper.epsilon.total_cmp(&a.hyper.epsilon))
                .then(a.hyper.gamma.total_cmp(&b.hyper.gamma))
        })
        .copied()
        .ok_or(SvrError::NoViableCell)?;
    Ok(GridResult {
        best: best.hyper,
        best_rmse: best.val_rmse,
        cells,
    })
}

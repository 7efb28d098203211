use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::Network;
use super::optim::OptimizerState;
use super::params::NetworkParams;
use super::spec::NetworkSpec;
use super::train::{LossHistory, TrainedModel, TrainingConfig};
use super::NnError;
use crate::timeseries::{LagSelection, ScalerParams};

pub const CHECKPOINT_FORMAT: u32 = 1;

/// Everything needed to predict with a trained network or to resume its
/// training exactly. Floats are written as shortest round-trip decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: u32,
    pub spec: NetworkSpec,
    pub params: NetworkParams,
    pub training: TrainingConfig,
    pub optimizer: OptimizerState,
    pub epochs_completed: usize,
    pub history: LossHistory,
    pub scaler: Option<ScalerParams>,
    pub lags: Option<LagSelection>,
    pub train_fraction: Option<f64>,
}

impl Checkpoint {
    pub fn new(model: &TrainedModel, training: &TrainingConfig) -> Self {
        Self {
            format: CHECKPOINT_FORMAT,
            spec: model.network.spec.clone(),
            params: model.network.params.clone(),
            training: training.clone(),
            optimizer: model.optimizer.clone(),
            epochs_completed: model.epochs_completed,
            history: model.history.clone(),
            scaler: None,
            lags: None,
            train_fraction: None,
        }
    }

    pub fn with_data(mut self, scaler: ScalerParams, lags: LagSelection, train_fraction: f64) -> Self {
        self.scaler = Some(scaler);
        self.lags = Some(lags);
        self.train_fraction = Some(train_fraction);
        self
    }

    pub fn network(&self) -> Result<Network, NnError> {
        Network::from_parts(self.spec.clone(), self.params.clone())
    }

    pub fn into_model(self) -> Result<TrainedModel, NnError> {
        let network = Network::from_parts(self.spec, self.params)?;
        if !self.optimizer.check_shapes(&network.params) {
            return Err(NnError::Checkpoint(
                "optimizer state does not mirror the parameters".into(),
            ));
        }
        Ok(TrainedModel {
            network,
            optimizer: self.optimizer,
            history: self.history,
            epochs_completed: self.epochs_completed,
        })
    }

    pub fn to_json(&self) -> Result<String, NnError> {
        if !self.params.all_finite() {
            return Err(NnError::Checkpoint("parameters are not finite".into()));
        }
        serde_json::to_string_pretty(self).map_err(|e| NnError::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, NnError> {
        let cp: Self = serde_json::from_str(text).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        if cp.format != CHECKPOINT_FORMAT {
            return Err(NnError::Checkpoint(format!("unsupported format {}", cp.format)));
        }
        cp.spec.validate()?;
        cp.params.check_shapes(&cp.spec)?;
        Ok(cp)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NnError> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NnError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

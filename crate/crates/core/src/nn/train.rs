use std::io::Write;
use std::path::Path;

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dropout::Mode;
use super::network::{loss_and_gradients, Network};
use super::optim::{clip_global_norm, OptimizerConfig, OptimizerState};
use super::NnError;

pub const DEFAULT_EPOCHS: usize = 200;
pub const DEFAULT_BATCH_SIZE: usize = 128;

// keeps the dropout stream apart from the initialization stream
const DROPOUT_SEED_SALT: u64 = 0x6a09_e667_f3bc_c909;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub optimizer: OptimizerConfig,
    pub epochs: usize,
    pub batch_size: usize,
    /// Reshuffle the training rows every epoch with this seed; `None` keeps
    /// chronological batches.
    pub shuffle_seed: Option<u64>,
    /// Global L2 gradient-norm ceiling.
    pub clip_norm: Option<f64>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig::default(),
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            shuffle_seed: None,
            clip_norm: None,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.batch_size == 0 {
            return Err(NnError::Config("batch_size must be >= 1".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0 && c.is_finite()) {
                return Err(NnError::Config(format!("clip norm must be > 0, got {c}")));
            }
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    /// Mean of the mini-batch losses seen during the epoch, weighted by batch
    /// size (dropout active).
    pub train_mse: f64,
    pub val_mse: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossHistory {
    pub epochs: Vec<EpochLoss>,
}

impl LossHistory {
    pub fn last(&self) -> Option<&EpochLoss> {
        self.epochs.last()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), NnError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| NnError::Io(e.to_string());
        w.write_record(["epoch", "train_mse", "val_mse"]).map_err(io)?;
        for e in &self.epochs {
            let val = e.val_mse.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([e.epoch.to_string(), e.train_mse.to_string(), val])
                .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NnError> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Inputs and targets, one row per sample.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    pub inputs: ArrayView2<'a, f64>,
    pub targets: ArrayView2<'a, f64>,
}

impl<'a> Samples<'a> {
    pub fn new(inputs: ArrayView2<'a, f64>, targets: ArrayView2<'a, f64>) -> Result<Self, NnError> {
        if inputs.nrows() != targets.nrows() {
            return Err(NnError::Shape(format!(
                "{} input rows but {} target rows",
                inputs.nrows(),
                targets.nrows()
            )));
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<'a> From<&'a crate::timeseries::SupervisedWindowSet> for Samples<'a> {
    fn from(w: &'a crate::timeseries::SupervisedWindowSet) -> Self {
        Self {
            inputs: w.inputs.view(),
            targets: w.targets.view(),
        }
    }
}

/// A network part way through (or done with) training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub network: Network,
    pub optimizer: OptimizerState,
    pub history: LossHistory,
    pub epochs_completed: usize,
}

impl TrainedModel {
    pub fn fresh(network: Network, config: &TrainingConfig) -> Self {
        let optimizer = OptimizerState::new(config.optimizer, &network.params);
        Self {
            network,
            optimizer,
            history: LossHistory::default(),
            epochs_completed: 0,
        }
    }
}

/// Trains a freshly initialized network for `config.epochs` epochs.
pub fn train<'a>(
    network: Network,
    config: &TrainingConfig,
    train_set: Samples<'a>,
    validation: Option<Samples<'a>>,
) -> Result<TrainedModel, NnError> {
    let mut model = TrainedModel::fresh(network, config);
    train_resume(&mut model, config, train_set, validation)?;
    Ok(model)
}

/// Continues training until `config.epochs` epochs are complete.
///
/// Every epoch draws its shuffle order and dropout masks from its own stream,
/// so resuming from a checkpoint reproduces an uninterrupted run exactly.
pub fn train_resume<'a>(
    model: &mut TrainedModel,
    config: &TrainingConfig,
    train_set: Samples<'a>,
    validation: Option<Samples<'a>>,
) -> Result<(), NnError> {
    config.validate()?;
    let spec = model.network.spec.clone();
    spec.validate()?;
    if train_set.is_empty() {
        return Err(NnError::EmptyTrainingSet);
    }
    for s in std::iter::once(&train_set).chain(validation.as_ref()) {
        if s.inputs.ncols() != spec.input_dim || s.targets.ncols() != spec.horizon {
            return Err(NnError::Shape(format!(
                "samples are {} -> {}, network expects {} -> {}",
                s.inputs.ncols(),
                s.targets.ncols(),
                spec.input_dim,
                spec.horizon
            )));
        }
    }
    if !model.optimizer.check_shapes(&model.network.params) {
        return Err(NnError::Shape("optimizer state does not mirror the parameters".into()));
    }

    let n = train_set.len();
    let mut order: Vec<usize> = (0..n).collect();
    while model.epochs_completed < config.epochs {
        let epoch = model.epochs_completed + 1;
        if let Some(seed) = config.shuffle_seed {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(epoch as u64);
            order = (0..n).collect();
            order.shuffle(&mut rng);
        }
        let mut drop_rng = ChaCha8Rng::seed_from_u64(spec.seed ^ DROPOUT_SEED_SALT);
        drop_rng.set_stream(epoch as u64);

        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let (x, y);
            let (xv, yv) = if config.shuffle_seed.is_some() {
                x = train_set.inputs.select(Axis(0), chunk);
                y = train_set.targets.select(Axis(0), chunk);
                (x.view(), y.view())
            } else {
                let r = chunk[0]..chunk[0] + chunk.len();
                (
                    train_set.inputs.slice(ndarray::s![r.clone(), ..]),
                    train_set.targets.slice(ndarray::s![r, ..]),
                )
            };
            let (loss, mut grads) =
                loss_and_gradients(&spec, &model.network.params, xv, yv, &mut Mode::Train(&mut drop_rng))?;
            if !loss.is_finite() {
                return Err(NnError::Divergence { epoch, loss });
            }
            if let Some(c) = config.clip_norm {
                clip_global_norm(&mut grads, c);
            }
            model.optimizer.step(&mut model.network.params, &grads)?;
            loss_sum += loss * chunk.len() as f64;
        }
        let train_mse = loss_sum / n as f64;
        let val_mse = match &validation {
            Some(v) if !v.is_empty() => {
                let pred = model.network.predict(v.inputs)?;
                Some(super::network::mse(&pred, &v.targets.to_owned()))
            }
            _ => None,
        };
        if !model.network.params.all_finite() || val_mse.is_some_and(|v| !v.is_finite()) {
            return Err(NnError::Divergence {
                epoch,
                loss: val_mse.unwrap_or(f64::NAN),
            });
        }
        model.history.epochs.push(EpochLoss {
            epoch,
            train_mse,
            val_mse,
        });
        model.epochs_completed = epoch;
    }
    Ok(())
}

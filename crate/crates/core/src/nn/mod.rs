//! Dense and recurrent networks trained with exact backpropagation through
//! time.
//!
//! Recurrent cells follow these conventions:
//! - LSTM gates all peek at `c_{t-1}` unless [`OutputPeephole::Current`] is set;
//! - the GRU update gate weights the previous state:
//!   `h_t = z * h_{t-1} + (1 - z) * h_bar`.

mod activation;
mod cells;
mod checkpoint;
mod dropout;
mod gradcheck;
mod network;
mod optim;
mod params;
mod spec;
mod train;

use thiserror::Error;

pub use activation::{sigmoid, sigmoid_inplace, tanh_act, tanh_inplace};
pub use cells::{DenseActivation, DenseCache, GruCache, LstmCache, RnnCache};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT};
pub use dropout::{apply_dropout, Mode};
pub use gradcheck::{
    gradcheck, gradcheck_instance, random_instance, GradcheckReport, TensorError, FD_STEP, REL_FLOOR, VARIANTS,
};
pub use network::{backward, forward, gather_steps, loss_and_gradients, mse, ForwardCache, Network};
pub use optim::{clip_global_norm, OptimizerConfig, OptimizerState};
pub use params::{DenseLayerParams, GruCellParams, LayerParams, LstmCellParams, NetworkParams, RnnCellParams};
pub use spec::{
    Architecture, InputLayout, NetworkSpec, OutputPeephole, DEFAULT_DROPOUT, DEFAULT_HIDDEN_LAYERS, DEFAULT_HIDDEN_SIZE,
};
pub use train::{
    train, train_resume, EpochLoss, LossHistory, Samples, TrainedModel, TrainingConfig, DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS,
};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid network configuration: {0}")]
    Config(String),
    #[error("dropout rate must be in [0, 1), got {0}")]
    DropoutRate(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite gradient in {tensor}[{index}] at optimizer step {step}")]
    NonFiniteGradient { tensor: String, index: usize, step: u64 },
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("I/O error: {0}")]
    Io(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

impl From<std::io::Error> for NnError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

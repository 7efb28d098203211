use serde::{Deserialize, Serialize};

use super::params::NetworkParams;
use super::NnError;

/// Update rule and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerConfig {
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
    Rmsprop {
        lr: f64,
        rho: f64,
        epsilon: f64,
    },
    Sgd {
        lr: f64,
    },
}

impl OptimizerConfig {
    pub fn adam(lr: f64) -> Self {
        Self::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn rmsprop(lr: f64) -> Self {
        Self::Rmsprop {
            lr,
            rho: 0.9,
            epsilon: 1e-7,
        }
    }

    pub fn sgd(lr: f64) -> Self {
        Self::Sgd { lr }
    }

    pub fn from_name(name: &str, lr: f64) -> Result<Self, NnError> {
        match name.to_ascii_lowercase().as_str() {
            "adam" => Ok(Self::adam(lr)),
            "rmsprop" => Ok(Self::rmsprop(lr)),
            "sgd" => Ok(Self::sgd(lr)),
            other => Err(NnError::Config(format!(
                "unknown optimizer `{other}` (expected adam, rmsprop or sgd)"
            ))),
        }
    }

    pub fn learning_rate(&self) -> f64 {
        match *self {
            Self::Adam { lr, .. } | Self::Rmsprop { lr, .. } | Self::Sgd { lr } => lr,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let lr = self.learning_rate();
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(NnError::Config(format!("learning rate must be > 0, got {lr}")));
        }
        Ok(())
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::adam(1e-3)
    }
}

/// Per-parameter accumulators, in [`NetworkParams::tensors`] order.
///
/// Adam uses both `first` and `second`; RMSprop only `second`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub config: OptimizerConfig,
    pub step: u64,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig, params: &NetworkParams) -> Self {
        let zeros = |used: bool| {
            if used {
                params.tensors().iter().map(|(_, t)| vec![0.0; t.len()]).collect()
            } else {
                Vec::new()
            }
        };
        let (first, second) = match config {
            OptimizerConfig::Adam { .. } => (zeros(true), zeros(true)),
            OptimizerConfig::Rmsprop { .. } => (zeros(false), zeros(true)),
            OptimizerConfig::Sgd { .. } => (zeros(false), zeros(false)),
        };
        Self {
            config,
            step: 0,
            first,
            second,
        }
    }

    /// Applies one update. Non-finite gradients abort before any parameter
    /// changes.
    pub fn step(&mut self, params: &mut NetworkParams, grads: &NetworkParams) -> Result<(), NnError> {
        for (name, g) in grads.tensors() {
            if let Some(i) = g.iter().position(|v| !v.is_finite()) {
                return Err(NnError::NonFiniteGradient {
                    tensor: name,
                    index: i,
                    step: self.step + 1,
                });
            }
        }
        debug_assert!(self.check_shapes(params), "optimizer state does not match the parameters");
        self.step += 1;
        let t = self.step as f64;
        let tensors = params.tensors_mut().into_iter().zip(grads.tensors());
        match self.config {
            OptimizerConfig::Adam {
                lr,
                beta1,
                beta2,
                epsilon,
            } => {
                let c1 = 1.0 - beta1.powf(t);
                let c2 = 1.0 - beta2.powf(t);
                for (((_, p), (_, g)), (m, v)) in tensors.zip(self.first.iter_mut().zip(self.second.iter_mut())) {
                    for j in 0..p.len() {
                        m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                        v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                        let m_hat = m[j] / c1;
                        let v_hat = v[j] / c2;
                        p[j] -= lr * m_hat / (v_hat.sqrt() + epsilon);
                    }
                }
            }
            OptimizerConfig::Rmsprop { lr, rho, epsilon } => {
                for (((_, p), (_, g)), s) in tensors.zip(self.second.iter_mut()) {
                    for j in 0..p.len() {
                        s[j] = rho * s[j] + (1.0 - rho) * g[j] * g[j];
                        p[j] -= lr * g[j] / (s[j].sqrt() + epsilon);
                    }
                }
            }
            OptimizerConfig::Sgd { lr } => {
                for ((_, p), (_, g)) in tensors {
                    for (pj, gj) in p.iter_mut().zip(g) {
                        *pj -= lr * gj;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn check_shapes(&self, params: &NetworkParams) -> bool {
        let lens: Vec<usize> = params.tensors().iter().map(|(_, t)| t.len()).collect();
        let fits = |acc: &Vec<Vec<f64>>| acc.is_empty() || acc.iter().map(Vec::len).eq(lens.iter().copied());
        fits(&self.first) && fits(&self.second)
    }
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut NetworkParams, max_norm: f64) -> f64 {
    let norm = grads.l2_norm();
    if norm > max_norm && norm.is_finite() {
        let s = max_norm / norm;
        for (_, t) in grads.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= s);
        }
    }
    norm
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::NnError;
use crate::timeseries::LagSelection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Ffnn,
    Rnn,
    Lstm,
    Gru,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [Self::Ffnn, Self::Rnn, Self::Lstm, Self::Gru];

    pub fn is_recurrent(self) -> bool {
        !matches!(self, Self::Ffnn)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Ffnn => "ffnn",
            Self::Rnn => "rnn",
            Self::Lstm => "lstm",
            Self::Gru => "gru",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ffnn" => Ok(Self::Ffnn),
            "rnn" => Ok(Self::Rnn),
            "lstm" => Ok(Self::Lstm),
            "gru" => Ok(Self::Gru),
            other => Err(NnError::Config(format!("unknown architecture `{other}`"))),
        }
    }
}

/// Which cell state the LSTM output-gate peephole reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputPeephole {
    /// `o_t` sees `c_{t-1}`, like the input and forget gates.
    #[default]
    Previous,
    /// `o_t` sees the freshly updated `c_t`.
    Current,
}

/// How a flat input row is presented to the first layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputLayout {
    /// The whole row is one input vector.
    Flat,
    /// The row is a time-major sequence, oldest step first. `steps[t][k]`
    /// names the input column feeding channel `k` at step `t`; `None` feeds 0.
    Sequence {
        step_dim: usize,
        steps: Vec<Vec<Option<usize>>>,
    },
}

impl InputLayout {
    /// `steps` consecutive blocks of `step_dim` columns.
    pub fn contiguous(steps: usize, step_dim: usize) -> Self {
        Self::Sequence {
            step_dim,
            steps: (0..steps)
                .map(|t| (0..step_dim).map(|k| Some(t * step_dim + k)).collect())
                .collect(),
        }
    }

    /// One step per distinct lag (largest lag first) carrying (level,
    /// rainfall); a channel not selected at that lag is fed 0.
    pub fn from_lags(lags: &LagSelection) -> Self {
        let mut all: Vec<usize> = lags.level_lags.iter().chain(&lags.rainfall_lags).copied().collect();
        all.sort_unstable_by(|a, b| b.cmp(a));
        all.dedup();
        let n_level = lags.level_lags.len();
        let steps = all
            .into_iter()
            .map(|lag| {
                let level = lags.level_lags.iter().position(|&l| l == lag);
                let rain = lags.rainfall_lags.iter().position(|&l| l == lag).map(|p| n_level + p);
                vec![level, rain]
            })
            .collect();
        Self::Sequence { step_dim: 2, steps }
    }

    pub fn step_count(&self) -> usize {
        match self {
            Self::Flat => 1,
            Self::Sequence { steps, .. } => steps.len(),
        }
    }

    fn validate(&self, input_dim: usize) -> Result<(), NnError> {
        if let Self::Sequence { step_dim, steps } = self {
            if *step_dim == 0 || steps.is_empty() {
                return Err(NnError::Config("sequence layout needs steps and channels".into()));
            }
            for step in steps {
                if step.len() != *step_dim || step.iter().flatten().any(|&c| c >= input_dim) {
                    return Err(NnError::Config(format!(
                        "sequence step {step:?} does not fit {step_dim} channels over {input_dim} inputs"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub const DEFAULT_HIDDEN_LAYERS: usize = 2;
pub const DEFAULT_HIDDEN_SIZE: usize = 128;
pub const DEFAULT_DROPOUT: f64 = 0.35;

/// Shape and regularization of a forecasting network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub architecture: Architecture,
    pub hidden_layers: usize,
    pub hidden_size: usize,
    pub input_dim: usize,
    pub horizon: usize,
    pub dropout_rate: f64,
    pub seed: u64,
    pub layout: InputLayout,
    #[serde(default)]
    pub output_peephole: OutputPeephole,
}

impl NetworkSpec {
    /// Defaults for a window set with the given lag selection and horizon.
    pub fn for_lags(architecture: Architecture, lags: &LagSelection, horizon: usize, seed: u64) -> Self {
        Self {
            architecture,
            hidden_layers: DEFAULT_HIDDEN_LAYERS,
            hidden_size: DEFAULT_HIDDEN_SIZE,
            input_dim: lags.input_dim(),
            horizon,
            dropout_rate: DEFAULT_DROPOUT,
            seed,
            layout: if architecture.is_recurrent() {
                InputLayout::from_lags(lags)
            } else {
                InputLayout::Flat
            },
            output_peephole: OutputPeephole::Previous,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.hidden_layers == 0 || self.hidden_size == 0 || self.horizon == 0 || self.input_dim == 0 {
            return Err(NnError::Config(format!(
                "hidden_layers, hidden_size, horizon and input_dim must be >= 1 (got {}, {}, {}, {})",
                self.hidden_layers, self.hidden_size, self.horizon, self.input_dim
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(NnError::DropoutRate(self.dropout_rate));
        }
        match (&self.layout, self.architecture.is_recurrent()) {
            (InputLayout::Flat, true) | (InputLayout::Sequence { .. }, false) => Err(NnError::Config(format!(
                "{} cannot use a {} layout",
                self.architecture,
                if self.architecture.is_recurrent() {
                    "flat"
                } else {
                    "sequence"
                }
            ))),
            (layout, _) => layout.validate(self.input_dim),
        }
    }

    /// Input width of the first layer.
    pub fn first_layer_input(&self) -> usize {
        match &self.layout {
            InputLayout::Flat => self.input_dim,
            InputLayout::Sequence { step_dim, .. } => *step_dim,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lag_layout_is_oldest_first_and_ragged() {
        let lags = LagSelection::new(vec![1, 2, 5], vec![0, 2], 0.2, 6).unwrap();
        let layout = InputLayout::from_lags(&lags);
        assert_eq!(
            layout,
            InputLayout::Sequence {
                step_dim: 2,
                steps: vec![
                    vec![Some(2), None],
                    vec![Some(1), Some(4)],
                    vec![Some(0), None],
                    vec![None, Some(3)],
                ],
            }
        );
    }

    #[test]
    fn spec_validation() {
        let lags = LagSelection::new(vec![1, 2], vec![0], 0.2, 3).unwrap();
        let mut spec = NetworkSpec::for_lags(Architecture::Lstm, &lags, 24, 1);
        assert_eq!(spec.hidden_layers, 2);
        assert_eq!(spec.hidden_size, 128);
        assert_eq!(spec.dropout_rate, 0.35);
        assert!(spec.validate().is_ok());
        spec.dropout_rate = 1.0;
        assert!(matches!(spec.validate(), Err(NnError::DropoutRate(_))));
        spec.dropout_rate = 0.0;
        spec.layout = InputLayout::Flat;
        assert!(spec.validate().is_err());
        assert_eq!("GRU".parse::<Architecture>().unwrap(), Architecture::Gru);
    }
}

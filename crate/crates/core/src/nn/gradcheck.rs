use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::dropout::Mode;
use super::network::loss_and_gradients;
use super::params::NetworkParams;
use super::spec::{Architecture, InputLayout, NetworkSpec, OutputPeephole};
use super::NnError;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Denominator floor for the relative error, so entries whose true gradient
/// is ~0 are judged by absolute error.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorError {
    pub name: String,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub label: String,
    pub instances: usize,
    pub tensors: Vec<TensorError>,
}

impl GradcheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.max_rel_error).fold(0.0, f64::max)
    }

    pub fn tensor(&self, name: &str) -> Option<&TensorError> {
        self.tensors.iter().find(|t| t.name == name)
    }
}

fn loss(
    spec: &NetworkSpec,
    params: &NetworkParams,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    dropout_seed: Option<u64>,
) -> Result<(f64, NetworkParams), NnError> {
    match dropout_seed {
        // same seed on every call, so every evaluation sees the same masks
        Some(s) => loss_and_gradients(
            spec,
            params,
            inputs,
            targets,
            &mut Mode::Train(&mut ChaCha8Rng::seed_from_u64(s)),
        ),
        None => loss_and_gradients(spec, params, inputs, targets, &mut Mode::<ChaCha8Rng>::Inference),
    }
}

/// Compares the analytic gradient with central differences for every
/// parameter entry.
pub fn gradcheck_instance(
    spec: &NetworkSpec,
    params: &NetworkParams,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    dropout_seed: Option<u64>,
) -> Result<Vec<TensorError>, NnError> {
    let (_, analytic) = loss(spec, params, inputs, targets, dropout_seed)?;
    let mut probe = params.clone();
    let n_tensors = params.tensors().len();
    let mut out = Vec::with_capacity(n_tensors);
    for k in 0..n_tensors {
        let (name, grad) = {
            let all = analytic.tensors();
            (all[k].0.clone(), all[k].1.to_vec())
        };
        let mut err = TensorError {
            name,
            max_rel_error: 0.0,
            max_abs_error: 0.0,
        };
        for (j, &a) in grad.iter().enumerate() {
            let orig = probe.tensors()[k].1[j];
            probe.tensors_mut()[k].1[j] = orig + FD_STEP;
            let (up, _) = loss(spec, &probe, inputs, targets, dropout_seed)?;
            probe.tensors_mut()[k].1[j] = orig - FD_STEP;
            let (down, _) = loss(spec, &probe, inputs, targets, dropout_seed)?;
            probe.tensors_mut()[k].1[j] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(REL_FLOOR);
            err.max_abs_error = err.max_abs_error.max(abs);
            err.max_rel_error = err.max_rel_error.max(rel);
        }
        out.push(err);
    }
    Ok(out)
}

/// A small random network with inputs and targets: two layers of 3 units,
/// 4 time steps of 2 channels, 3 samples, 2 outputs.
pub fn random_instance(
    architecture: Architecture,
    peephole: OutputPeephole,
    seed: u64,
) -> (NetworkSpec, NetworkParams, Array2<f64>, Array2<f64>) {
    let (steps, step_dim, batch, horizon) = (4, 2, 3, 2);
    let spec = NetworkSpec {
        architecture,
        hidden_layers: 2,
        hidden_size: 3,
        input_dim: steps * step_dim,
        horizon,
        dropout_rate: 0.0,
        seed,
        layout: if architecture.is_recurrent() {
            InputLayout::contiguous(steps, step_dim)
        } else {
            InputLayout::Flat
        },
        output_peephole: peephole,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = NetworkParams::zeros(&spec);
    for (_, t) in params.tensors_mut() {
        t.iter_mut().for_each(|v| *v = rng.random_range(-0.9..0.9));
    }
    let inputs = Array2::from_shape_simple_fn((batch, spec.input_dim), || rng.random_range(-1.0..1.0));
    let targets = Array2::from_shape_simple_fn((batch, horizon), || rng.random_range(-1.0..1.0));
    (spec, params, inputs, targets)
}

/// The architectures checked by [`gradcheck`], with report labels.
pub const VARIANTS: [(&str, Architecture, OutputPeephole); 5] = [
    ("ffnn", Architecture::Ffnn, OutputPeephole::Previous),
    ("rnn", Architecture::Rnn, OutputPeephole::Previous),
    ("lstm", Architecture::Lstm, OutputPeephole::Previous),
    ("lstm-current-peephole", Architecture::Lstm, OutputPeephole::Current),
    ("gru", Architecture::Gru, OutputPeephole::Previous),
];

/// Runs [`gradcheck_instance`] on `instances` random networks of every
/// architecture and keeps the worst error per tensor.
pub fn gradcheck(instances: usize, seed: u64) -> Result<Vec<GradcheckReport>, NnError> {
    let mut reports = Vec::with_capacity(VARIANTS.len());
    for (label, arch, peephole) in VARIANTS {
        let mut tensors: Vec<TensorError> = Vec::new();
        for i in 0..instances {
            let (spec, params, x, y) = random_instance(arch, peephole, seed.wrapping_add(i as u64));
            let errs = gradcheck_instance(&spec, &params, x.view(), y.view(), None)?;
            if tensors.is_empty() {
                tensors = errs;
            } else {
                for (acc, e) in tensors.iter_mut().zip(errs) {
                    acc.max_rel_error = acc.max_rel_error.max(e.max_rel_error);
                    acc.max_abs_error = acc.max_abs_error.max(e.max_abs_error);
                }
            }
        }
        reports.push(GradcheckReport {
            label: label.to_string(),
            instances,
            tensors,
        });
    }
    Ok(reports)
}

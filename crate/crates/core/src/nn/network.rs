use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cells::{DenseActivation, DenseCache, GruCache, LstmCache, RnnCache};
use super::dropout::{apply_dropout, Mode};
use super::params::{LayerParams, NetworkParams};
use super::spec::{InputLayout, NetworkSpec};
use super::NnError;
use crate::forecaster::Forecaster;

/// Rows per chunk when predicting on large inputs.
const PREDICT_CHUNK: usize = 2048;

enum StepCaches {
    Dense(DenseCache),
    Rnn(Vec<RnnCache>),
    Lstm(Vec<LstmCache>),
    Gru(Vec<GruCache>),
}

struct LayerCache {
    steps: StepCaches,
    /// Dropout mask per step output; `None` means the output passed through.
    masks: Vec<Option<Array2<f64>>>,
}

/// Everything the backward pass needs from one forward pass.
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    head: DenseCache,
}

/// Splits flat rows into per-step input matrices.
pub fn gather_steps(inputs: ArrayView2<f64>, layout: &InputLayout) -> Vec<Array2<f64>> {
    match layout {
        InputLayout::Flat => vec![inputs.to_owned()],
        InputLayout::Sequence { step_dim, steps } => steps
            .iter()
            .map(|cols| {
                let mut x = Array2::zeros((inputs.nrows(), *step_dim));
                for (k, col) in cols.iter().enumerate() {
                    if let Some(c) = col {
                        x.column_mut(k).assign(&inputs.column(*c));
                    }
                }
                x
            })
            .collect(),
    }
}

fn check_input(spec: &NetworkSpec, inputs: &ArrayView2<f64>) -> Result<(), NnError> {
    if inputs.ncols() != spec.input_dim {
        return Err(NnError::Shape(format!(
            "expected {} input columns, got {}",
            spec.input_dim,
            inputs.ncols()
        )));
    }
    Ok(())
}

/// Runs the network on a batch; returns `(batch, horizon)` outputs.
pub fn forward<R: Rng>(
    spec: &NetworkSpec,
    params: &NetworkParams,
    inputs: ArrayView2<f64>,
    mode: &mut Mode<'_, R>,
) -> Result<(Array2<f64>, ForwardCache), NnError> {
    check_input(spec, &inputs)?;
    let batch = inputs.nrows();
    let hidden = spec.hidden_size;
    let mut seq = gather_steps(inputs, &spec.layout);
    let n_layers = params.layers.len();
    let mut caches = Vec::with_capacity(n_layers);

    for (k, layer) in params.layers.iter().enumerate() {
        let last = k + 1 == n_layers;
        let (steps, outputs): (StepCaches, Vec<Array2<f64>>) = match layer {
            LayerParams::Dense(p) => {
                let c = p.forward(seq[0].view(), DenseActivation::Tanh);
                let y = c.y.clone();
                (StepCaches::Dense(c), vec![y])
            }
            LayerParams::Rnn(p) => {
                let zero = Array2::zeros((batch, hidden));
                let mut cs: Vec<RnnCache> = Vec::with_capacity(seq.len());
                for x in &seq {
                    let h_prev = cs.last().map_or(zero.view(), |c| c.h.view());
                    let c = p.forward(x.view(), h_prev);
                    cs.push(c);
                }
                let outs = cs.iter().map(|c| c.h.clone()).collect();
                (StepCaches::Rnn(cs), outs)
            }
            LayerParams::Lstm(p) => {
                let zero = Array2::zeros((batch, hidden));
                let mut cs: Vec<LstmCache> = Vec::with_capacity(seq.len());
                for x in &seq {
                    let (h_prev, c_prev) = cs
                        .last()
                        .map_or((zero.view(), zero.view()), |c| (c.h.view(), c.c.view()));
                    let c = p.forward(x.view(), h_prev, c_prev, spec.output_peephole);
                    cs.push(c);
                }
                let outs = cs.iter().map(|c| c.h.clone()).collect();
                (StepCaches::Lstm(cs), outs)
            }
            LayerParams::Gru(p) => {
                let zero = Array2::zeros((batch, hidden));
                let mut cs: Vec<GruCache> = Vec::with_capacity(seq.len());
                for x in &seq {
                    let h_prev = cs.last().map_or(zero.view(), |c| c.h.view());
                    let c = p.forward(x.view(), h_prev);
                    cs.push(c);
                }
                let outs = cs.iter().map(|c| c.h.clone()).collect();
                (StepCaches::Gru(cs), outs)
            }
        };
        // the top layer only hands its final output to the head
        let consumed = if last { outputs.len() - 1 } else { 0 };
        let mut masks = vec![None; outputs.len()];
        let mut next = Vec::with_capacity(outputs.len() - consumed);
        for (t, out) in outputs.into_iter().enumerate().skip(consumed) {
            let (masked, mask) = apply_dropout(&out, spec.dropout_rate, mode)?;
            masks[t] = mask;
            next.push(masked);
        }
        seq = next;
        caches.push(LayerCache { steps, masks });
    }

    let top = seq.pop().expect("at least one hidden layer");
    let head = params.head.forward(top.view(), DenseActivation::Identity);
    let out = head.y.clone();
    Ok((out, ForwardCache { layers: caches, head }))
}

fn masked(d: Array2<f64>, mask: &Option<Array2<f64>>) -> Array2<f64> {
    match mask {
        Some(m) => d * m,
        None => d,
    }
}

/// Backpropagation through the head, the layer stack and time, given the
/// loss gradient w.r.t. the outputs.
pub fn backward(params: &NetworkParams, cache: &ForwardCache, d_out: &Array2<f64>) -> NetworkParams {
    let mut grads = params.zeros_like();
    let d_top = params
        .head
        .backward(&cache.head, d_out, &mut grads.head, true)
        .expect("dx requested");

    let n_layers = params.layers.len();
    // gradient w.r.t. each post-dropout output of the layer being processed
    let steps_top = cache.layers[n_layers - 1].masks.len();
    let mut d_outputs: Vec<Option<Array2<f64>>> = vec![None; steps_top];
    d_outputs[steps_top - 1] = Some(d_top);

    for k in (0..n_layers).rev() {
        let lc = &cache.layers[k];
        let need_dx = k > 0;
        let d_h: Vec<Option<Array2<f64>>> = d_outputs
            .into_iter()
            .zip(&lc.masks)
            .map(|(d, m)| d.map(|d| masked(d, m)))
            .collect();
        let t_len = d_h.len();
        let mut d_inputs: Vec<Option<Array2<f64>>> = vec![None; t_len];

        match (&params.layers[k], &mut grads.layers[k], &lc.steps) {
            (LayerParams::Dense(p), LayerParams::Dense(g), StepCaches::Dense(c)) => {
                let dy = d_h[0].clone().expect("dense output is consumed");
                d_inputs[0] = p.backward(c, &dy, g, need_dx);
            }
            (LayerParams::Rnn(p), LayerParams::Rnn(g), StepCaches::Rnn(cs)) => {
                let mut dh_next: Option<Array2<f64>> = None;
                for t in (0..t_len).rev() {
                    let dh = sum_opt(&d_h[t], dh_next.take(), cs[t].h.raw_dim());
                    let (dx, dh_prev) = p.backward(&cs[t], &dh, g, need_dx);
                    d_inputs[t] = dx;
                    dh_next = Some(dh_prev);
                }
            }
            (LayerParams::Lstm(p), LayerParams::Lstm(g), StepCaches::Lstm(cs)) => {
                let mut dh_next: Option<Array2<f64>> = None;
                let mut dc_next = Array2::zeros(cs[0].c.raw_dim());
                for t in (0..t_len).rev() {
                    let dh = sum_opt(&d_h[t], dh_next.take(), cs[t].h.raw_dim());
                    let (dx, dh_prev, dc_prev) = p.backward(&cs[t], &dh, &dc_next, g, need_dx);
                    d_inputs[t] = dx;
                    dh_next = Some(dh_prev);
                    dc_next = dc_prev;
                }
            }
            (LayerParams::Gru(p), LayerParams::Gru(g), StepCaches::Gru(cs)) => {
                let mut dh_next: Option<Array2<f64>> = None;
                for t in (0..t_len).rev() {
                    let dh = sum_opt(&d_h[t], dh_next.take(), cs[t].h.raw_dim());
                    let (dx, dh_prev) = p.backward(&cs[t], &dh, g, need_dx);
                    d_inputs[t] = dx;
                    dh_next = Some(dh_prev);
                }
            }
            _ => unreachable!("cache layout follows the parameter layout"),
        }
        d_outputs = d_inputs;
    }
    grads
}

fn sum_opt(a: &Option<Array2<f64>>, b: Option<Array2<f64>>, dim: ndarray::Ix2) -> Array2<f64> {
    match (a, b) {
        (Some(a), Some(b)) => b + a,
        (Some(a), None) => a.clone(),
        (None, Some(b)) => b,
        (None, None) => Array2::zeros(dim),
    }
}

/// Mean squared error over every output of every row.
pub fn mse(pred: &Array2<f64>, targets: &Array2<f64>) -> f64 {
    let n = pred.len() as f64;
    pred.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n
}

/// Loss and its exact gradient for one batch.
pub fn loss_and_gradients<R: Rng>(
    spec: &NetworkSpec,
    params: &NetworkParams,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    mode: &mut Mode<'_, R>,
) -> Result<(f64, NetworkParams), NnError> {
    if targets.dim() != (inputs.nrows(), spec.horizon) {
        return Err(NnError::Shape(format!(
            "targets are {:?}, expected ({}, {})",
            targets.dim(),
            inputs.nrows(),
            spec.horizon
        )));
    }
    let (pred, cache) = forward(spec, params, inputs, mode)?;
    let n = pred.len() as f64;
    let diff = &pred - &targets;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    let d_out = diff * (2.0 / n);
    Ok((loss, backward(params, &cache, &d_out)))
}

/// A network spec with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub spec: NetworkSpec,
    pub params: NetworkParams,
}

impl Network {
    /// Freshly initialized from `spec.seed`.
    pub fn new(spec: NetworkSpec) -> Result<Self, NnError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let params = NetworkParams::init(&spec, &mut rng);
        Ok(Self { spec, params })
    }

    pub fn from_parts(spec: NetworkSpec, params: NetworkParams) -> Result<Self, NnError> {
        spec.validate()?;
        params.check_shapes(&spec)?;
        Ok(Self { spec, params })
    }

    /// Inference-mode outputs, `(rows, horizon)`.
    pub fn predict(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>, NnError> {
        check_input(&self.spec, &inputs)?;
        let mut out = Array2::zeros((inputs.nrows(), self.spec.horizon));
        let mut start = 0;
        while start < inputs.nrows() {
            let end = (start + PREDICT_CHUNK).min(inputs.nrows());
            let chunk = inputs.slice(ndarray::s![start..end, ..]);
            let (y, _) = forward(&self.spec, &self.params, chunk, &mut Mode::<ChaCha8Rng>::Inference)?;
            out.slice_mut(ndarray::s![start..end, ..]).assign(&y);
            start = end;
        }
        Ok(out)
    }
}

impl Forecaster for Network {
    fn name(&self) -> String {
        self.spec.architecture.name().to_uppercase()
    }

    fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    fn horizon(&self) -> usize {
        self.spec.horizon
    }

    fn predict(&self, inputs: &Array2<f64>) -> Array2<f64> {
        Network::predict(self, inputs.view()).expect("input width checked by caller")
    }
}

//! Plain-loop, one-sample-at-a-time evaluation of the cells and networks,
//! used as an independent reference for the batched forward pass.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sewercast::nn::{Architecture, InputLayout, LayerParams, NetworkParams, NetworkSpec, OutputPeephole};

pub fn sig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn th(z: f64) -> f64 {
    let e = (2.0 * z).exp();
    if e.is_infinite() {
        1.0
    } else {
        (e - 1.0) / (e + 1.0)
    }
}

/// Row `j` of `m` dotted with `v`.
pub fn row_dot(m: &Array2<f64>, j: usize, v: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..v.len() {
        s += m[[j, k]] * v[k];
    }
    s
}

pub fn v(a: &Array1<f64>) -> Vec<f64> {
    a.to_vec()
}

/// One scalar step of whichever cell `layer` is. `state` is `h` (and `c`
/// for LSTM).
pub fn oracle_step(layer: &LayerParams, x: &[f64], h: &[f64], c: &[f64], peep: OutputPeephole) -> (Vec<f64>, Vec<f64>) {
    match layer {
        LayerParams::Dense(p) => {
            let (b, n) = (v(&p.b), p.b.len());
            ((0..n).map(|j| th(row_dot(&p.w, j, x) + b[j])).collect(), vec![])
        }
        LayerParams::Rnn(p) => {
            let n = p.b.len();
            let out = (0..n)
                .map(|j| th(row_dot(&p.w_h, j, h) + row_dot(&p.w_i, j, x) + p.b[j]))
                .collect();
            (out, vec![])
        }
        LayerParams::Lstm(p) => {
            let n = p.b_i.len();
            let mut h_new = vec![0.0; n];
            let mut c_new = vec![0.0; n];
            for j in 0..n {
                let i = sig(row_dot(&p.w_i, j, x) + row_dot(&p.u_i, j, h) + p.v_i[j] * c[j] + p.b_i[j]);
                let f = sig(row_dot(&p.w_f, j, x) + row_dot(&p.u_f, j, h) + p.v_f[j] * c[j] + p.b_f[j]);
                let cb = th(row_dot(&p.w_c, j, x) + row_dot(&p.u_c, j, h) + p.b_c[j]);
                c_new[j] = f * c[j] + i * cb;
                let seen = match peep {
                    OutputPeephole::Previous => c[j],
                    OutputPeephole::Current => c_new[j],
                };
                let o = sig(row_dot(&p.w_o, j, x) + row_dot(&p.u_o, j, h) + p.v_o[j] * seen + p.b_o[j]);
                h_new[j] = o * th(c_new[j]);
            }
            (h_new, c_new)
        }
        LayerParams::Gru(p) => {
            let n = p.b_z.len();
            let z: Vec<f64> = (0..n)
                .map(|j| sig(row_dot(&p.w_z, j, x) + row_dot(&p.u_z, j, h) + p.b_z[j]))
                .collect();
            let r: Vec<f64> = (0..n)
                .map(|j| sig(row_dot(&p.w_r, j, x) + row_dot(&p.u_r, j, h) + p.b_r[j]))
                .collect();
            let rh: Vec<f64> = (0..n).map(|j| r[j] * h[j]).collect();
            let out = (0..n)
                .map(|j| {
                    let hb = th(row_dot(&p.w_h, j, x) + row_dot(&p.u_h, j, &rh) + p.b_h[j]);
                    z[j] * h[j] + (1.0 - z[j]) * hb
                })
                .collect();
            (out, vec![])
        }
    }
}

/// Whole-network prediction for one row, oldest step first, linear head.
pub fn oracle_network(spec: &NetworkSpec, params: &NetworkParams, row: &[f64]) -> Vec<f64> {
    let mut seq: Vec<Vec<f64>> = match &spec.layout {
        InputLayout::Flat => vec![row.to_vec()],
        InputLayout::Sequence { steps, .. } => steps
            .iter()
            .map(|cols| cols.iter().map(|c| c.map_or(0.0, |c| row[c])).collect())
            .collect(),
    };
    for layer in &params.layers {
        let n = spec.hidden_size;
        let (mut h, mut c) = (vec![0.0; n], vec![0.0; n]);
        let mut outs = Vec::new();
        for x in &seq {
            let (h2, c2) = oracle_step(layer, x, &h, &c, spec.output_peephole);
            h = h2;
            if !c2.is_empty() {
                c = c2;
            }
            outs.push(h.clone());
        }
        seq = outs;
    }
    let top = seq.last().unwrap();
    (0..spec.horizon)
        .map(|j| row_dot(&params.head.w, j, top) + params.head.b[j])
        .collect()
}

pub fn random_case(
    arch: Architecture,
    peep: OutputPeephole,
    rng: &mut ChaCha8Rng,
) -> (NetworkSpec, NetworkParams, Array2<f64>) {
    let steps = rng.random_range(1..=5);
    let step_dim = rng.random_range(1..=3);
    let spec = NetworkSpec {
        architecture: arch,
        hidden_layers: rng.random_range(1..=2),
        hidden_size: 3,
        input_dim: steps * step_dim,
        horizon: 2,
        dropout_rate: 0.35,
        seed: 0,
        layout: if arch.is_recurrent() {
            InputLayout::contiguous(steps, step_dim)
        } else {
            InputLayout::Flat
        },
        output_peephole: peep,
    };
    let mut params = NetworkParams::zeros(&spec);
    for (_, t) in params.tensors_mut() {
        t.iter_mut().for_each(|x| *x = rng.random_range(-2.0..2.0));
    }
    let inputs = Array2::from_shape_simple_fn((4, spec.input_dim), || rng.random_range(-1.5..1.5));
    (spec, params, inputs)
}

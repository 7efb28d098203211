//! Recurrent cells and whole networks against a plain-loop step-through
//! re-implementation.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sewercast::nn::{
    forward, Architecture, InputLayout, LayerParams, Mode, Network, NetworkParams, NetworkSpec, OutputPeephole,
};

#[path = "common/cell_oracle.rs"]
mod cell_oracle;

use cell_oracle::*;

fn check_against_oracle(arch: Architecture, peep: OutputPeephole) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xce11 + arch as u64 * 17 + peep as u64);
    for _ in 0..100 {
        let (spec, params, inputs) = random_case(arch, peep, &mut rng);
        let (out, _) = forward(&spec, &params, inputs.view(), &mut Mode::<ChaCha8Rng>::Inference).unwrap();
        for (r, row) in inputs.rows().into_iter().enumerate() {
            let expect = oracle_network(&spec, &params, row.as_slice().unwrap());
            for (k, e) in expect.iter().enumerate() {
                assert!(
                    (out[[r, k]] - e).abs() <= 1e-12,
                    "{arch} {peep:?}: {} vs {e}",
                    out[[r, k]]
                );
            }
        }
    }
}

#[test]
fn ffnn_matches_scalar_oracle() {
    check_against_oracle(Architecture::Ffnn, OutputPeephole::Previous);
}

#[test]
fn rnn_matches_scalar_oracle() {
    check_against_oracle(Architecture::Rnn, OutputPeephole::Previous);
}

#[test]
fn lstm_matches_scalar_oracle() {
    check_against_oracle(Architecture::Lstm, OutputPeephole::Previous);
}

#[test]
fn lstm_current_peephole_matches_scalar_oracle() {
    check_against_oracle(Architecture::Lstm, OutputPeephole::Current);
}

#[test]
fn gru_matches_scalar_oracle() {
    check_against_oracle(Architecture::Gru, OutputPeephole::Previous);
}

#[test]
fn peephole_modes_differ() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut spec, params, inputs) = random_case(Architecture::Lstm, OutputPeephole::Previous, &mut rng);
    let a = Network::from_parts(spec.clone(), params.clone())
        .unwrap()
        .predict(inputs.view())
        .unwrap();
    spec.output_peephole = OutputPeephole::Current;
    let b = Network::from_parts(spec, params)
        .unwrap()
        .predict(inputs.view())
        .unwrap();
    assert!(a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 1e-6));
}

#[test]
fn zero_recurrence_rnn_equals_ffnn_bit_for_bit() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let d = rng.random_range(1..6);
        let base = NetworkSpec {
            architecture: Architecture::Ffnn,
            hidden_layers: 2,
            hidden_size: 5,
            input_dim: d,
            horizon: 3,
            dropout_rate: 0.0,
            seed: rng.random(),
            layout: InputLayout::Flat,
            output_peephole: OutputPeephole::Previous,
        };
        let ffnn = Network::new(base.clone()).unwrap();
        let rnn_spec = NetworkSpec {
            architecture: Architecture::Rnn,
            layout: InputLayout::contiguous(1, d),
            ..base
        };
        let mut rnn_params = NetworkParams::zeros(&rnn_spec);
        for (dst, src) in rnn_params.layers.iter_mut().zip(&ffnn.params.layers) {
            let (LayerParams::Rnn(r), LayerParams::Dense(f)) = (dst, src) else {
                unreachable!()
            };
            r.w_i.assign(&f.w);
            r.b.assign(&f.b);
        }
        rnn_params.head = ffnn.params.head.clone();
        let rnn = Network::from_parts(rnn_spec, rnn_params).unwrap();
        let x = Array2::from_shape_simple_fn((7, d), || rng.random_range(-1.0..1.0));
        assert_eq!(rnn.predict(x.view()).unwrap(), ffnn.predict(x.view()).unwrap());
    }
}

#[test]
fn predictions_ignore_batch_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for arch in Architecture::ALL {
        let (spec, params, x) = random_case(arch, OutputPeephole::Previous, &mut rng);
        let net = Network::from_parts(spec, params).unwrap();
        let y = net.predict(x.view()).unwrap();
        let perm = [2, 0, 3, 1];
        let xp = x.select(ndarray::Axis(0), &perm);
        let yp = net.predict(xp.view()).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(yp.row(i), y.row(p));
        }
    }
}

#[test]
fn hidden_unit_permutation_leaves_ffnn_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (spec, params, x) = {
        let (mut s, _, x) = random_case(Architecture::Ffnn, OutputPeephole::Previous, &mut rng);
        s.hidden_layers = 1;
        let mut p = NetworkParams::zeros(&s);
        for (_, t) in p.tensors_mut() {
            t.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        }
        (s, p, x)
    };
    let perm = [2, 0, 1];
    let mut permuted = params.clone();
    let (LayerParams::Dense(dst), LayerParams::Dense(src)) = (&mut permuted.layers[0], &params.layers[0]) else {
        unreachable!()
    };
    for (new, &old) in perm.iter().enumerate() {
        dst.w.row_mut(new).assign(&src.w.row(old));
        dst.b[new] = src.b[old];
        permuted.head.w.column_mut(new).assign(&params.head.w.column(old));
    }
    let a = Network::from_parts(spec.clone(), params)
        .unwrap()
        .predict(x.view())
        .unwrap();
    let b = Network::from_parts(spec, permuted).unwrap().predict(x.view()).unwrap();
    for (p, q) in a.iter().zip(&b) {
        assert!((p - q).abs() < 1e-14);
    }
}

#[test]
fn long_rollouts_stay_finite_and_gates_open() {
    // unit-norm inputs over 10^4 steps
    let steps = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for arch in [Architecture::Rnn, Architecture::Lstm, Architecture::Gru] {
        let spec = NetworkSpec {
            architecture: arch,
            hidden_layers: 1,
            hidden_size: 4,
            input_dim: 2 * steps,
            horizon: 1,
            dropout_rate: 0.0,
            seed: 21,
            layout: InputLayout::contiguous(steps, 2),
            output_peephole: OutputPeephole::Previous,
        };
        let mut params = NetworkParams::zeros(&spec);
        for (_, t) in params.tensors_mut() {
            t.iter_mut().for_each(|v| *v = rng.random_range(-3.0..3.0));
        }
        let mut row = Array2::zeros((1, 2 * steps));
        for t in 0..steps {
            let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            row[[0, 2 * t]] = a.cos();
            row[[0, 2 * t + 1]] = a.sin();
        }
        let layer = &params.layers[0];
        let (mut h, mut c) = (Array2::zeros((1, 4)), Array2::zeros((1, 4)));
        for t in 0..steps {
            let x = row.slice(ndarray::s![.., 2 * t..2 * t + 2]);
            match layer {
                LayerParams::Rnn(p) => h = p.forward(x, h.view()).h,
                LayerParams::Lstm(p) => {
                    let s = p.forward(x, h.view(), c.view(), OutputPeephole::Previous);
                    for g in [&s.i, &s.f, &s.o] {
                        assert!(g.iter().all(|&v| (0.0..=1.0).contains(&v)));
                    }
                    h = s.h;
                    c = s.c;
                }
                LayerParams::Gru(p) => {
                    let s = p.forward(x, h.view());
                    assert!(s.z.iter().chain(&s.r).all(|&v| (0.0..=1.0).contains(&v)));
                    h = s.h;
                }
                LayerParams::Dense(_) => unreachable!(),
            }
            assert!(h.iter().chain(&c).all(|v| v.is_finite()), "{arch} step {t}");
        }
        let out = Network::from_parts(spec, params).unwrap().predict(row.view()).unwrap();
        assert!(out[[0, 0]].is_finite());
    }
}

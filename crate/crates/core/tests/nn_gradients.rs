use ndarray::{concatenate, Array2, Axis};
use rand_chacha::ChaCha8Rng;
use sewercast::nn::{
    gradcheck, gradcheck_instance, loss_and_gradients, random_instance, Architecture, Mode, NetworkParams,
    OutputPeephole, VARIANTS,
};

const TOL: f64 = 1e-4;

#[test]
fn every_tensor_matches_finite_differences_over_20_seeds() {
    let reports = gradcheck(20, 1000).unwrap();
    assert_eq!(reports.len(), VARIANTS.len());
    for r in &reports {
        for t in &r.tensors {
            assert!(t.max_rel_error < TOL, "{} {}: {:e}", r.label, t.name, t.max_rel_error);
        }
    }
}

#[test]
fn report_lists_each_tensor_once() {
    for r in gradcheck(1, 5).unwrap() {
        let mut names: Vec<_> = r.tensors.iter().map(|t| t.name.clone()).collect();
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n, "{}", r.label);
        assert!(names.contains(&"head.w".to_string()));
    }
}

#[test]
fn peephole_and_reset_paths_are_checked() {
    let reports = gradcheck(3, 42).unwrap();
    let lstm = reports.iter().find(|r| r.label == "lstm").unwrap();
    for layer in 0..2 {
        for v in ["v_i", "v_f", "v_o"] {
            let t = lstm.tensor(&format!("layer{layer}.lstm.{v}")).unwrap();
            assert!(t.max_rel_error < TOL);
            assert!(t.max_abs_error.is_finite());
        }
    }
    let gru = reports.iter().find(|r| r.label == "gru").unwrap();
    assert!(gru.tensor("layer0.gru.u_r").unwrap().max_rel_error < TOL);
}

#[test]
fn gradients_hold_under_a_fixed_dropout_mask() {
    for (_, arch, peep) in VARIANTS {
        for seed in 0..3 {
            let (mut spec, params, x, y) = random_instance(arch, peep, 500 + seed);
            spec.dropout_rate = 0.35;
            let errs = gradcheck_instance(&spec, &params, x.view(), y.view(), Some(seed)).unwrap();
            for e in errs {
                assert!(e.max_rel_error < TOL, "{arch} {}: {:e}", e.name, e.max_rel_error);
            }
        }
    }
}

#[test]
fn duplicated_samples_double_the_summed_gradient() {
    // mean loss is unchanged by duplication, so N * mean-gradient doubles
    for (_, arch, peep) in VARIANTS {
        let (spec, params, x, y) = random_instance(arch, peep, 9);
        let g1 = grads(&spec, &params, &x, &y);
        let x2 = concatenate![Axis(0), x, x];
        let y2 = concatenate![Axis(0), y, y];
        let g2 = grads(&spec, &params, &x2, &y2);
        let n = (x.nrows() * spec.horizon) as f64;
        for ((name, a), (_, b)) in g1.tensors().into_iter().zip(g2.tensors()) {
            for (p, q) in a.iter().zip(b) {
                let sum1 = p * n;
                let sum2 = q * 2.0 * n;
                assert!((sum2 - 2.0 * sum1).abs() <= 1e-12 * (1.0 + sum1.abs()), "{arch} {name}");
            }
        }
    }
}

fn grads(spec: &sewercast::nn::NetworkSpec, params: &NetworkParams, x: &Array2<f64>, y: &Array2<f64>) -> NetworkParams {
    loss_and_gradients(spec, params, x.view(), y.view(), &mut Mode::<ChaCha8Rng>::Inference)
        .unwrap()
        .1
}

#[test]
fn zero_params_give_zero_weight_gradients() {
    // with zero weights every hidden activation is 0 (tanh) and the head
    // output is 0, so only bias paths and the head carry gradient
    let (spec, _, x, _) = random_instance(Architecture::Ffnn, OutputPeephole::Previous, 1);
    let zero = NetworkParams::zeros(&spec);
    let y = Array2::zeros((x.nrows(), spec.horizon));
    let g = grads(&spec, &zero, &x, &y);
    assert!(g.tensors().iter().all(|(_, t)| t.iter().all(|v| *v == 0.0)));

    let y = Array2::from_elem((x.nrows(), spec.horizon), 0.5);
    let g = grads(&spec, &zero, &x, &y);
    // d/db of mean (b - 0.5)^2 over rows and outputs: -1 / horizon
    let expect = -1.0 / spec.horizon as f64;
    assert!(g.head.b.iter().all(|v| (*v - expect).abs() < 1e-15));
    assert!(g.head.w.iter().all(|v| *v == 0.0));
    let errs = gradcheck_instance(&spec, &zero, x.view(), y.view(), None).unwrap();
    assert!(errs.iter().all(|e| e.max_rel_error < TOL));
}

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::spec::{Architecture, NetworkSpec};
use super::NnError;

fn uniform_matrix<R: Rng>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Array2<f64> {
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

fn uniform_vector<R: Rng>(len: usize, bound: f64, rng: &mut R) -> Array1<f64> {
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    Array1::from_shape_simple_fn(len, || dist.sample(rng))
}

fn fan_in_bound(fan_in: usize) -> f64 {
    1.0 / (fan_in.max(1) as f64).sqrt()
}

/// `W` is `(out, in)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayerParams {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl DenseLayerParams {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            w: Array2::zeros((output, input)),
            b: Array1::zeros(output),
        }
    }

    pub fn init<R: Rng>(input: usize, output: usize, rng: &mut R) -> Self {
        let bound = fan_in_bound(input);
        Self {
            w: uniform_matrix(output, input, bound, rng),
            b: uniform_vector(output, bound, rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.nrows()
    }
}

/// Elman cell: `h_t = tanh(W_i x_t + W_h h_{t-1} + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnnCellParams {
    pub w_i: Array2<f64>,
    pub w_h: Array2<f64>,
    pub b: Array1<f64>,
}

impl RnnCellParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_i: Array2::zeros((hidden, input)),
            w_h: Array2::zeros((hidden, hidden)),
            b: Array1::zeros(hidden),
        }
    }

    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            w_i: uniform_matrix(hidden, input, fan_in_bound(input), rng),
            w_h: uniform_matrix(hidden, hidden, fan_in_bound(hidden), rng),
            b: uniform_vector(hidden, fan_in_bound(input), rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.b.len()
    }
}

/// Peephole LSTM. Gates `i`, `f`, `o` each have `W`, `U`, diagonal
/// peephole `V` and bias; the candidate `c̄` has no peephole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCellParams {
    pub w_i: Array2<f64>,
    pub u_i: Array2<f64>,
    pub v_i: Array1<f64>,
    pub b_i: Array1<f64>,
    pub w_f: Array2<f64>,
    pub u_f: Array2<f64>,
    pub v_f: Array1<f64>,
    pub b_f: Array1<f64>,
    pub w_o: Array2<f64>,
    pub u_o: Array2<f64>,
    pub v_o: Array1<f64>,
    pub b_o: Array1<f64>,
    pub w_c: Array2<f64>,
    pub u_c: Array2<f64>,
    pub b_c: Array1<f64>,
}

impl LstmCellParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let m = |c| Array2::zeros((hidden, c));
        let v = || Array1::zeros(hidden);
        Self {
            w_i: m(input),
            u_i: m(hidden),
            v_i: v(),
            b_i: v(),
            w_f: m(input),
            u_f: m(hidden),
            v_f: v(),
            b_f: v(),
            w_o: m(input),
            u_o: m(hidden),
            v_o: v(),
            b_o: v(),
            w_c: m(input),
            u_c: m(hidden),
            b_c: v(),
        }
    }

    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let bi = fan_in_bound(input);
        let bh = fan_in_bound(hidden);
        let mut p = Self::zeros(input, hidden);
        for (w, u, v, b) in [
            (&mut p.w_i, &mut p.u_i, Some(&mut p.v_i), &mut p.b_i),
            (&mut p.w_f, &mut p.u_f, Some(&mut p.v_f), &mut p.b_f),
            (&mut p.w_o, &mut p.u_o, Some(&mut p.v_o), &mut p.b_o),
            (&mut p.w_c, &mut p.u_c, None, &mut p.b_c),
        ] {
            *w = uniform_matrix(hidden, input, bi, rng);
            *u = uniform_matrix(hidden, hidden, bh, rng);
            if let Some(v) = v {
                *v = uniform_vector(hidden, bh, rng);
            }
            *b = uniform_vector(hidden, bi, rng);
        }
        p.b_f.fill(1.0);
        p
    }

    pub fn hidden(&self) -> usize {
        self.b_i.len()
    }
}

/// GRU with update gate `z`, reset gate `r` and candidate `h̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruCellParams {
    pub w_z: Array2<f64>,
    pub u_z: Array2<f64>,
    pub b_z: Array1<f64>,
    pub w_r: Array2<f64>,
    pub u_r: Array2<f64>,
    pub b_r: Array1<f64>,
    pub w_h: Array2<f64>,
    pub u_h: Array2<f64>,
    pub b_h: Array1<f64>,
}

impl GruCellParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let m = |c| Array2::zeros((hidden, c));
        let v = || Array1::zeros(hidden);
        Self {
            w_z: m(input),
            u_z: m(hidden),
            b_z: v(),
            w_r: m(input),
            u_r: m(hidden),
            b_r: v(),
            w_h: m(input),
            u_h: m(hidden),
            b_h: v(),
        }
    }

    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let bi = fan_in_bound(input);
        let bh = fan_in_bound(hidden);
        let mut p = Self::zeros(input, hidden);
        for (w, u, b) in [
            (&mut p.w_z, &mut p.u_z, &mut p.b_z),
            (&mut p.w_r, &mut p.u_r, &mut p.b_r),
            (&mut p.w_h, &mut p.u_h, &mut p.b_h),
        ] {
            *w = uniform_matrix(hidden, input, bi, rng);
            *u = uniform_matrix(hidden, hidden, bh, rng);
            *b = uniform_vector(hidden, bi, rng);
        }
        p
    }

    pub fn hidden(&self) -> usize {
        self.b_z.len()
    }
}

/// One hidden layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[allow(clippy::large_enum_variant)]
pub enum LayerParams {
    Dense(DenseLayerParams),
    Rnn(RnnCellParams),
    Lstm(LstmCellParams),
    Gru(GruCellParams),
}

macro_rules! tensors {
    ($p:expr, [$($m:ident),*]) => {
        vec![$((stringify!($m), $p.$m.as_slice().expect("standard layout"))),*]
    };
}

macro_rules! tensors_mut {
    ($p:expr, [$($m:ident),*]) => {
        vec![$((stringify!($m), $p.$m.as_slice_mut().expect("standard layout"))),*]
    };
}

impl LayerParams {
    fn zeros(arch: Architecture, input: usize, hidden: usize) -> Self {
        match arch {
            Architecture::Ffnn => Self::Dense(DenseLayerParams::zeros(input, hidden)),
            Architecture::Rnn => Self::Rnn(RnnCellParams::zeros(input, hidden)),
            Architecture::Lstm => Self::Lstm(LstmCellParams::zeros(input, hidden)),
            Architecture::Gru => Self::Gru(GruCellParams::zeros(input, hidden)),
        }
    }

    fn init<R: Rng>(arch: Architecture, input: usize, hidden: usize, rng: &mut R) -> Self {
        match arch {
            Architecture::Ffnn => Self::Dense(DenseLayerParams::init(input, hidden, rng)),
            Architecture::Rnn => Self::Rnn(RnnCellParams::init(input, hidden, rng)),
            Architecture::Lstm => Self::Lstm(LstmCellParams::init(input, hidden, rng)),
            Architecture::Gru => Self::Gru(GruCellParams::init(input, hidden, rng)),
        }
    }

    /// `(input, hidden)` widths.
    pub fn dims(&self) -> (usize, usize) {
        let w = match self {
            Self::Dense(p) => &p.w,
            Self::Rnn(p) => &p.w_i,
            Self::Lstm(p) => &p.w_i,
            Self::Gru(p) => &p.w_z,
        };
        (w.ncols(), w.nrows())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Dense(_) => "dense",
            Self::Rnn(_) => "rnn",
            Self::Lstm(_) => "lstm",
            Self::Gru(_) => "gru",
        }
    }

    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        match self {
            Self::Dense(p) => tensors!(p, [w, b]),
            Self::Rnn(p) => tensors!(p, [w_i, w_h, b]),
            Self::Lstm(p) => tensors!(
                p,
                [w_i, u_i, v_i, b_i, w_f, u_f, v_f, b_f, w_o, u_o, v_o, b_o, w_c, u_c, b_c]
            ),
            Self::Gru(p) => tensors!(p, [w_z, u_z, b_z, w_r, u_r, b_r, w_h, u_h, b_h]),
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        match self {
            Self::Dense(p) => tensors_mut!(p, [w, b]),
            Self::Rnn(p) => tensors_mut!(p, [w_i, w_h, b]),
            Self::Lstm(p) => tensors_mut!(
                p,
                [w_i, u_i, v_i, b_i, w_f, u_f, v_f, b_f, w_o, u_o, v_o, b_o, w_c, u_c, b_c]
            ),
            Self::Gru(p) => tensors_mut!(p, [w_z, u_z, b_z, w_r, u_r, b_r, w_h, u_h, b_h]),
        }
    }
}

/// Every trainable tensor of a network. Gradients use the same type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub layers: Vec<LayerParams>,
    pub head: DenseLayerParams,
}

impl NetworkParams {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        let mut input = spec.first_layer_input();
        let mut layers = Vec::with_capacity(spec.hidden_layers);
        for _ in 0..spec.hidden_layers {
            layers.push(LayerParams::zeros(spec.architecture, input, spec.hidden_size));
            input = spec.hidden_size;
        }
        Self {
            layers,
            head: DenseLayerParams::zeros(spec.hidden_size, spec.horizon),
        }
    }

    /// Uniform `±1/sqrt(fan_in)` weights; LSTM forget bias starts at 1.
    pub fn init<R: Rng>(spec: &NetworkSpec, rng: &mut R) -> Self {
        let mut input = spec.first_layer_input();
        let mut layers = Vec::with_capacity(spec.hidden_layers);
        for _ in 0..spec.hidden_layers {
            layers.push(LayerParams::init(spec.architecture, input, spec.hidden_size, rng));
            input = spec.hidden_size;
        }
        Self {
            layers,
            head: DenseLayerParams::init(spec.hidden_size, spec.horizon, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill(0.0);
        z
    }

    pub fn fill(&mut self, value: f64) {
        for (_, t) in self.tensors_mut() {
            t.fill(value);
        }
    }

    /// `(name, values)` for every tensor, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for (k, layer) in self.layers.iter().enumerate() {
            let kind = layer.kind();
            out.extend(
                layer
                    .tensors()
                    .into_iter()
                    .map(|(n, t)| (format!("layer{k}.{kind}.{n}"), t)),
            );
        }
        out.push(("head.w".into(), self.head.w.as_slice().expect("standard layout")));
        out.push(("head.b".into(), self.head.b.as_slice().expect("standard layout")));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = Vec::new();
        for (k, layer) in self.layers.iter_mut().enumerate() {
            let kind = layer.kind();
            out.extend(
                layer
                    .tensors_mut()
                    .into_iter()
                    .map(|(n, t)| (format!("layer{k}.{kind}.{n}"), t)),
            );
        }
        out.push(("head.w".into(), self.head.w.as_slice_mut().expect("standard layout")));
        out.push(("head.b".into(), self.head.b.as_slice_mut().expect("standard layout")));
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        for ((_, dst), (_, src)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|(_, t)| t.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// Checks that the tensor shapes agree with `spec`.
    pub fn check_shapes(&self, spec: &NetworkSpec) -> Result<(), NnError> {
        let expected = Self::zeros(spec);
        let same_tensors = self.tensors().len() == expected.tensors().len()
            && self
                .tensors()
                .iter()
                .zip(expected.tensors())
                .all(|((a, x), (b, y))| *a == b && x.len() == y.len());
        let same_dims = self.layers.len() == expected.layers.len()
            && self
                .layers
                .iter()
                .zip(&expected.layers)
                .all(|(a, b)| a.dims() == b.dims())
            && self.head.w.dim() == expected.head.w.dim();
        if same_tensors && same_dims {
            Ok(())
        } else {
            Err(NnError::Shape("parameter tensors do not match the network spec".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::spec::InputLayout;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(arch: Architecture) -> NetworkSpec {
        NetworkSpec {
            architecture: arch,
            hidden_layers: 2,
            hidden_size: 3,
            input_dim: 4,
            horizon: 2,
            dropout_rate: 0.0,
            seed: 0,
            layout: if arch.is_recurrent() {
                InputLayout::contiguous(2, 2)
            } else {
                InputLayout::Flat
            },
            output_peephole: Default::default(),
        }
    }

    #[test]
    fn tensor_names_are_unique_and_shapes_match() {
        for arch in Architecture::ALL {
            let s = spec(arch);
            let p = NetworkParams::init(&s, &mut ChaCha8Rng::seed_from_u64(1));
            p.check_shapes(&s).unwrap();
            let names: Vec<String> = p.tensors().into_iter().map(|(n, _)| n).collect();
            let mut dedup = names.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), names.len());
            assert!(p.all_finite());
        }
    }

    #[test]
    fn init_bounds_and_forget_bias() {
        let s = spec(Architecture::Lstm);
        let p = NetworkParams::init(&s, &mut ChaCha8Rng::seed_from_u64(2));
        let LayerParams::Lstm(cell) = &p.layers[0] else {
            panic!()
        };
        assert!(cell.b_f.iter().all(|&b| b == 1.0));
        let bound = 1.0 / 2f64.sqrt();
        assert!(cell.w_i.iter().all(|w| w.abs() <= bound));
        let LayerParams::Lstm(deep) = &p.layers[1] else {
            panic!()
        };
        assert!(deep.w_c.iter().all(|w| w.abs() <= 1.0 / 3f64.sqrt()));
    }

    #[test]
    fn same_seed_same_params() {
        let s = spec(Architecture::Gru);
        let a = NetworkParams::init(&s, &mut ChaCha8Rng::seed_from_u64(7));
        let b = NetworkParams::init(&s, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }
}

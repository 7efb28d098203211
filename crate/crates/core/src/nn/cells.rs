//! Batched single-step forward and backward passes for each layer type.
//!
//! Rows of every matrix are batch samples. Backward functions accumulate
//! parameter gradients into `grads` and return gradients for the step's
//! inputs and previous state.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::activation::{sigmoid_inplace, tanh_inplace};
use super::params::{DenseLayerParams, GruCellParams, LstmCellParams, RnnCellParams};
use super::spec::OutputPeephole;

/// `x Wᵀ + h Uᵀ + b`, with the recurrent term skipped when `u` is `None`.
fn affine(
    x: &ArrayView2<f64>,
    w: &Array2<f64>,
    h: Option<(&ArrayView2<f64>, &Array2<f64>)>,
    b: &Array1<f64>,
) -> Array2<f64> {
    let mut a = x.dot(&w.t());
    if let Some((h, u)) = h {
        general_mat_mul(1.0, h, &u.t(), 1.0, &mut a);
    }
    a += b;
    a
}

/// `grad_w += daᵀ x`
fn acc_outer(grad_w: &mut Array2<f64>, da: &Array2<f64>, x: &ArrayView2<f64>) {
    general_mat_mul(1.0, &da.t(), x, 1.0, grad_w);
}

fn acc_bias(grad_b: &mut Array1<f64>, da: &Array2<f64>) {
    *grad_b += &da.sum_axis(Axis(0));
}

/// `out += da W`
fn acc_back(out: &mut Array2<f64>, da: &Array2<f64>, w: &Array2<f64>) {
    general_mat_mul(1.0, da, w, 1.0, out);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseActivation {
    Tanh,
    Identity,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub activation: DenseActivation,
}

impl DenseLayerParams {
    pub fn forward(&self, x: ArrayView2<f64>, activation: DenseActivation) -> DenseCache {
        let mut y = affine(&x, &self.w, None, &self.b);
        if activation == DenseActivation::Tanh {
            tanh_inplace(&mut y);
        }
        DenseCache {
            x: x.to_owned(),
            y,
            activation,
        }
    }

    pub fn backward(
        &self,
        cache: &DenseCache,
        dy: &Array2<f64>,
        grads: &mut Self,
        need_dx: bool,
    ) -> Option<Array2<f64>> {
        let da = match cache.activation {
            DenseActivation::Tanh => dy * &cache.y.mapv(|y| 1.0 - y * y),
            DenseActivation::Identity => dy.clone(),
        };
        acc_outer(&mut grads.w, &da, &cache.x.view());
        acc_bias(&mut grads.b, &da);
        need_dx.then(|| da.dot(&self.w))
    }
}

#[derive(Debug, Clone)]
pub struct RnnCache {
    pub x: Array2<f64>,
    pub h_prev: Array2<f64>,
    pub h: Array2<f64>,
}

impl RnnCellParams {
    pub fn forward(&self, x: ArrayView2<f64>, h_prev: ArrayView2<f64>) -> RnnCache {
        let mut h = affine(&x, &self.w_i, Some((&h_prev, &self.w_h)), &self.b);
        tanh_inplace(&mut h);
        RnnCache {
            x: x.to_owned(),
            h_prev: h_prev.to_owned(),
            h,
        }
    }

    /// Returns `(dx, dh_prev)`.
    pub fn backward(
        &self,
        cache: &RnnCache,
        dh: &Array2<f64>,
        grads: &mut Self,
        need_dx: bool,
    ) -> (Option<Array2<f64>>, Array2<f64>) {
        let da = dh * &cache.h.mapv(|h| 1.0 - h * h);
        acc_outer(&mut grads.w_i, &da, &cache.x.view());
        acc_outer(&mut grads.w_h, &da, &cache.h_prev.view());
        acc_bias(&mut grads.b, &da);
        (need_dx.then(|| da.dot(&self.w_i)), da.dot(&self.w_h))
    }
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    pub x: Array2<f64>,
    pub h_prev: Array2<f64>,
    pub c_prev: Array2<f64>,
    pub i: Array2<f64>,
    pub f: Array2<f64>,
    pub o: Array2<f64>,
    pub c_bar: Array2<f64>,
    pub c: Array2<f64>,
    pub tanh_c: Array2<f64>,
    pub h: Array2<f64>,
    pub peephole: OutputPeephole,
}

impl LstmCellParams {
    pub fn forward(
        &self,
        x: ArrayView2<f64>,
        h_prev: ArrayView2<f64>,
        c_prev: ArrayView2<f64>,
        peephole: OutputPeephole,
    ) -> LstmCache {
        let gate = |w, u, v: &Array1<f64>, b, peek: &ArrayView2<f64>| {
            let mut a = affine(&x, w, Some((&h_prev, u)), b);
            a += &(peek * v);
            sigmoid_inplace(&mut a);
            a
        };
        let i = gate(&self.w_i, &self.u_i, &self.v_i, &self.b_i, &c_prev);
        let f = gate(&self.w_f, &self.u_f, &self.v_f, &self.b_f, &c_prev);
        let mut c_bar = affine(&x, &self.w_c, Some((&h_prev, &self.u_c)), &self.b_c);
        tanh_inplace(&mut c_bar);
        let c = &f * &c_prev + &i * &c_bar;
        let o = match peephole {
            OutputPeephole::Previous => gate(&self.w_o, &self.u_o, &self.v_o, &self.b_o, &c_prev),
            OutputPeephole::Current => gate(&self.w_o, &self.u_o, &self.v_o, &self.b_o, &c.view()),
        };
        let mut tanh_c = c.clone();
        tanh_inplace(&mut tanh_c);
        let h = &o * &tanh_c;
        LstmCache {
            x: x.to_owned(),
            h_prev: h_prev.to_owned(),
            c_prev: c_prev.to_owned(),
            i,
            f,
            o,
            c_bar,
            c,
            tanh_c,
            h,
            peephole,
        }
    }

    /// Given gradients w.r.t. `h_t` and `c_t`, returns `(dx, dh_prev, dc_prev)`.
    pub fn backward(
        &self,
        cache: &LstmCache,
        dh: &Array2<f64>,
        dc_next: &Array2<f64>,
        grads: &mut Self,
        need_dx: bool,
    ) -> (Option<Array2<f64>>, Array2<f64>, Array2<f64>) {
        let LstmCache {
            x,
            h_prev,
            c_prev,
            i,
            f,
            o,
            c_bar,
            c,
            tanh_c,
            ..
        } = cache;
        let d_o = dh * tanh_c;
        let da_o = &d_o * &o.mapv(|g| g * (1.0 - g));
        let mut dc = dc_next + &(dh * o * &tanh_c.mapv(|t| 1.0 - t * t));
        let o_peek = match cache.peephole {
            OutputPeephole::Previous => c_prev,
            OutputPeephole::Current => {
                dc += &(&da_o * &self.v_o);
                c
            }
        };
        let da_i = &dc * c_bar * &i.mapv(|g| g * (1.0 - g));
        let da_f = &dc * c_prev * &f.mapv(|g| g * (1.0 - g));
        let da_c = &dc * i * &c_bar.mapv(|t| 1.0 - t * t);

        let mut dc_prev = &dc * f + &da_i * &self.v_i + &da_f * &self.v_f;
        if cache.peephole == OutputPeephole::Previous {
            dc_prev += &(&da_o * &self.v_o);
        }

        let xv = x.view();
        let hv = h_prev.view();
        for (da, gw, gu, gb) in [
            (&da_i, &mut grads.w_i, &mut grads.u_i, &mut grads.b_i),
            (&da_f, &mut grads.w_f, &mut grads.u_f, &mut grads.b_f),
            (&da_o, &mut grads.w_o, &mut grads.u_o, &mut grads.b_o),
            (&da_c, &mut grads.w_c, &mut grads.u_c, &mut grads.b_c),
        ] {
            acc_outer(gw, da, &xv);
            acc_outer(gu, da, &hv);
            acc_bias(gb, da);
        }
        grads.v_i += &(&da_i * c_prev).sum_axis(Axis(0));
        grads.v_f += &(&da_f * c_prev).sum_axis(Axis(0));
        grads.v_o += &(&da_o * o_peek).sum_axis(Axis(0));

        let mut dh_prev = da_i.dot(&self.u_i);
        acc_back(&mut dh_prev, &da_f, &self.u_f);
        acc_back(&mut dh_prev, &da_o, &self.u_o);
        acc_back(&mut dh_prev, &da_c, &self.u_c);

        let dx = need_dx.then(|| {
            let mut dx = da_i.dot(&self.w_i);
            acc_back(&mut dx, &da_f, &self.w_f);
            acc_back(&mut dx, &da_o, &self.w_o);
            acc_back(&mut dx, &da_c, &self.w_c);
            dx
        });
        (dx, dh_prev, dc_prev)
    }
}

#[derive(Debug, Clone)]
pub struct GruCache {
    pub x: Array2<f64>,
    pub h_prev: Array2<f64>,
    pub z: Array2<f64>,
    pub r: Array2<f64>,
    pub r_h: Array2<f64>,
    pub h_bar: Array2<f64>,
    pub h: Array2<f64>,
}

impl GruCellParams {
    /// `h_t = z ∘ h_{t-1} + (1 - z) ∘ h̄`: the update gate weights the
    /// previous state.
    pub fn forward(&self, x: ArrayView2<f64>, h_prev: ArrayView2<f64>) -> GruCache {
        let mut z = affine(&x, &self.w_z, Some((&h_prev, &self.u_z)), &self.b_z);
        sigmoid_inplace(&mut z);
        let mut r = affine(&x, &self.w_r, Some((&h_prev, &self.u_r)), &self.b_r);
        sigmoid_inplace(&mut r);
        let r_h = &r * &h_prev;
        let mut h_bar = affine(&x, &self.w_h, Some((&r_h.view(), &self.u_h)), &self.b_h);
        tanh_inplace(&mut h_bar);
        let h = &z * &h_prev + &z.mapv(|g| 1.0 - g) * &h_bar;
        GruCache {
            x: x.to_owned(),
            h_prev: h_prev.to_owned(),
            z,
            r,
            r_h,
            h_bar,
            h,
        }
    }

    /// Returns `(dx, dh_prev)`.
    pub fn backward(
        &self,
        cache: &GruCache,
        dh: &Array2<f64>,
        grads: &mut Self,
        need_dx: bool,
    ) -> (Option<Array2<f64>>, Array2<f64>) {
        let GruCache {
            x,
            h_prev,
            z,
            r,
            r_h,
            h_bar,
            ..
        } = cache;
        let da_z = dh * &(h_prev - h_bar) * &z.mapv(|g| g * (1.0 - g));
        let da_h = dh * &z.mapv(|g| 1.0 - g) * &h_bar.mapv(|t| 1.0 - t * t);
        let d_rh = da_h.dot(&self.u_h);
        let da_r = &d_rh * h_prev * &r.mapv(|g| g * (1.0 - g));

        let mut dh_prev = dh * z + &d_rh * r;
        acc_back(&mut dh_prev, &da_z, &self.u_z);
        acc_back(&mut dh_prev, &da_r, &self.u_r);

        let xv = x.view();
        acc_outer(&mut grads.w_z, &da_z, &xv);
        acc_outer(&mut grads.u_z, &da_z, &h_prev.view());
        acc_bias(&mut grads.b_z, &da_z);
        acc_outer(&mut grads.w_r, &da_r, &xv);
        acc_outer(&mut grads.u_r, &da_r, &h_prev.view());
        acc_bias(&mut grads.b_r, &da_r);
        acc_outer(&mut grads.w_h, &da_h, &xv);
        acc_outer(&mut grads.u_h, &da_h, &r_h.view());
        acc_bias(&mut grads.b_h, &da_h);

        let dx = need_dx.then(|| {
            let mut dx = da_z.dot(&self.w_z);
            acc_back(&mut dx, &da_r, &self.w_r);
            acc_back(&mut dx, &da_h, &self.w_h);
            dx
        });
        (dx, dh_prev)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rnn_scalar_case() {
        let p = RnnCellParams {
            w_i: array![[1.0]],
            w_h: array![[0.5]],
            b: array![0.0],
        };
        let h = p.forward(array![[1.0]].view(), array![[0.2]].view()).h;
        assert!((h[[0, 0]] - 1.1f64.tanh()).abs() < 1e-15);
        assert!((h[[0, 0]] - 0.800499).abs() < 1e-6);
    }

    #[test]
    fn zero_parameters() {
        let x = array![[0.3, -1.2]];
        let h0 = Array2::zeros((1, 3));
        let rnn = RnnCellParams::zeros(2, 3).forward(x.view(), array![[0.4, 0.1, -0.2]].view());
        assert!(rnn.h.iter().all(|&v| v == 0.0));

        let lstm = LstmCellParams::zeros(2, 3).forward(x.view(), h0.view(), h0.view(), OutputPeephole::Previous);
        for g in [&lstm.i, &lstm.f, &lstm.o] {
            assert!(g.iter().all(|&v| v == 0.5));
        }
        assert!(lstm.c_bar.iter().chain(&lstm.c).chain(&lstm.h).all(|&v| v == 0.0));

        let gru = GruCellParams::zeros(2, 3).forward(x.view(), h0.view());
        assert!(gru.z.iter().chain(&gru.r).all(|&v| v == 0.5));
        assert!(gru.h_bar.iter().chain(&gru.h).all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_gates_hold_memory() {
        let mut p = LstmCellParams::zeros(1, 2);
        p.b_f.fill(40.0);
        p.b_i.fill(-40.0);
        p.w_c.fill(1.0);
        let c_prev = array![[0.7, -0.3]];
        let h_prev = array![[0.1, 0.2]];
        let out = p.forward(
            array![[2.0]].view(),
            h_prev.view(),
            c_prev.view(),
            OutputPeephole::Previous,
        );
        for (a, b) in out.c.iter().zip(&c_prev) {
            assert!((a - b).abs() < 1e-6);
        }

        let mut g = GruCellParams::zeros(1, 2);
        g.b_z.fill(40.0);
        g.w_h.fill(3.0);
        let out = g.forward(array![[1.0]].view(), h_prev.view());
        for (a, b) in out.h.iter().zip(&h_prev) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn dense_scalar_case() {
        let p = DenseLayerParams {
            w: array![[2.0]],
            b: array![0.5],
        };
        let y = p.forward(array![[1.0]].view(), DenseActivation::Tanh).y;
        assert!((y[[0, 0]] - 0.986614).abs() < 1e-6);
    }
}

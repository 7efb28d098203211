//! Sequential minimal optimization for the ε-SVR dual.
//!
//! The dual is written over `2N` variables `β = [α; α*]` with labels
//! `y = [+1; -1]`:
//!
//! ```text
//! min ½ βᵀQβ + pᵀβ   s.t. yᵀβ = 0, 0 ≤ β ≤ C
//! Q_st = y_s y_t K(s mod N, t mod N),  p = [ε - z; ε + z]
//! ```
//!
//! Working pairs are chosen by maximal violation for the first index and
//! second-order gain for the second.

use std::rc::Rc;

use ndarray::ArrayView2;

use super::kernel::rbf;
use super::{SvrError, SvrHyperparams};

/// Curvature floor for pairs of coincident points.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoConfig {
    /// Stop once the maximal KKT violation falls below this. The default
    /// 1e-4 keeps predictions within about 3e-4 of the exact optimum.
    pub tolerance: f64,
    /// Iteration cap is this times the sample count.
    pub iterations_per_sample: usize,
    /// Memory budget for cached kernel rows.
    pub cache_bytes: usize,
}

impl Default for SmoConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            iterations_per_sample: 100_000,
            cache_bytes: 256 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    /// `α_i - α*_i` per sample.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    /// Maximal KKT violation at exit.
    pub violation: f64,
}

/// Kernel rows with least-recently-used eviction.
struct RowCache<'a> {
    x: ArrayView2<'a, f64>,
    gamma: f64,
    rows: Vec<Option<Rc<Vec<f64>>>>,
    last_used: Vec<u64>,
    clock: u64,
    held: usize,
    capacity: usize,
}

impl<'a> RowCache<'a> {
    fn new(x: ArrayView2<'a, f64>, gamma: f64, bytes: usize) -> Self {
        let n = x.nrows();
        let capacity = (bytes / (n.max(1) * std::mem::size_of::<f64>())).clamp(2, n.max(2));
        Self {
            x,
            gamma,
            rows: vec![None; n],
            last_used: vec![0; n],
            clock: 0,
            held: 0,
            capacity,
        }
    }

    fn row(&mut self, i: usize) -> Rc<Vec<f64>> {
        self.clock += 1;
        self.last_used[i] = self.clock;
        if let Some(r) = &self.rows[i] {
            return Rc::clone(r);
        }
        if self.held == self.capacity {
            let victim = (0..self.rows.len())
                .filter(|&k| self.rows[k].is_some())
                .min_by_key(|&k| self.last_used[k])
                .expect("cache is full");
            self.rows[victim] = None;
            self.held -= 1;
        }
        let xi = self.x.row(i);
        let xi = xi.as_slice().expect("standard layout");
        let row: Vec<f64> = self
            .x
            .rows()
            .into_iter()
            .map(|xk| rbf(xi, xk.as_slice().expect("standard layout"), self.gamma))
            .collect();
        let row = Rc::new(row);
        self.rows[i] = Some(Rc::clone(&row));
        self.held += 1;
        row
    }
}

/// Solves the ε-SVR dual for inputs `x` (one row per sample) and targets `z`.
pub fn solve(
    x: ArrayView2<f64>,
    z: &[f64],
    hyper: &SvrHyperparams,
    config: &SmoConfig,
) -> Result<SmoSolution, SvrError> {
    hyper.validate()?;
    let n = x.nrows();
    if n < 2 {
        return Err(SvrError::TooFewSamples(n));
    }
    if z.len() != n {
        return Err(SvrError::DimensionMismatch {
            expected: n,
            actual: z.len(),
        });
    }
    if x.iter().chain(z).any(|v| !v.is_finite()) {
        return Err(SvrError::NonFinite);
    }
    let x = x.as_standard_layout();
    let c = hyper.c;
    let eps = hyper.epsilon;
    let l = 2 * n;
    let y = |t: usize| if t < n { 1.0 } else { -1.0 };
    let mut beta = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| if t < n { eps - z[t] } else { eps + z[t - n] })
        .collect();
    let mut cache = RowCache::new(x.view(), hyper.gamma, config.cache_bytes);
    let max_iter = config.iterations_per_sample.saturating_mul(n).max(1);

    let in_up = |t: usize, b: f64| if t < n { b < c } else { b > 0.0 };
    let in_low = |t: usize, b: f64| if t < n { b > 0.0 } else { b < c };

    let mut iterations = 0;
    let violation = loop {
        // first index: maximal violation
        let mut g_max = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..l {
            if in_up(t, beta[t]) {
                let v = -y(t) * grad[t];
                if v > g_max {
                    g_max = v;
                    i = t;
                }
            }
        }
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        if i != usize::MAX {
            let k_i = cache.row(i % n);
            for t in 0..l {
                if !in_low(t, beta[t]) {
                    continue;
                }
                let yg = y(t) * grad[t];
                g_max2 = g_max2.max(yg);
                let b = g_max + yg;
                if b > 0.0 {
                    // K_ii = K_tt = 1 for the RBF kernel
                    let a = (2.0 - 2.0 * k_i[t % n]).max(TAU);
                    let gain = -(b * b) / a;
                    if gain <= best {
                        best = gain;
                        j = t;
                    }
                }
            }
        }
        let gap = g_max + g_max2;
        if i == usize::MAX || j == usize::MAX || gap < config.tolerance {
            break gap.max(0.0);
        }
        if iterations >= max_iter {
            return Err(SvrError::NotConverged {
                iterations,
                violation: gap,
            });
        }
        iterations += 1;

        let k_i = cache.row(i % n);
        let k_j = cache.row(j % n);
        let (yi, yj) = (y(i), y(j));
        let q_ij = yi * yj * k_i[j % n];
        let (old_i, old_j) = (beta[i], beta[j]);
        if yi != yj {
            let quad = (2.0 + 2.0 * q_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = beta[i] - beta[j];
            beta[i] += delta;
            beta[j] += delta;
            if diff > 0.0 {
                if beta[j] < 0.0 {
                    beta[j] = 0.0;
                    beta[i] = diff;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = -diff;
            }
            if diff > 0.0 {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = c - diff;
                }
            } else if beta[j] > c {
                beta[j] = c;
                beta[i] = c + diff;
            }
        } else {
            let quad = (2.0 - 2.0 * q_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = beta[i] + beta[j];
            beta[i] -= delta;
            beta[j] += delta;
            if sum > c {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = sum - c;
                }
                if beta[j] > c {
                    beta[j] = c;
                    beta[i] = sum - c;
                }
            } else {
                if beta[j] < 0.0 {
                    beta[j] = 0.0;
                    beta[i] = sum;
                }
                if beta[i] < 0.0 {
                    beta[i] = 0.0;
                    beta[j] = sum;
                }
            }
        }
        let d_i = (beta[i] - old_i) * yi;
        let d_j = (beta[j] - old_j) * yj;
        for (t, g) in grad.iter_mut().enumerate().take(l) {
            let k = t % n;
            *g += y(t) * (k_i[k] * d_i + k_j[k] * d_j);
        }
    };

    let coefficients: Vec<f64> = (0..n).map(|k| beta[k] - beta[k + n]).collect();
    Ok(SmoSolution {
        coefficients,
        intercept: -rho(&beta, &grad, n, c),
        iterations,
        violation,
    })
}

/// Mean of `y_t G_t` over free variables, or the middle of the feasible
/// interval when none is free.
fn rho(beta: &[f64], grad: &[f64], n: usize, c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum) = (0usize, 0.0);
    for t in 0..2 * n {
        let pos = t < n;
        let yg = if pos { grad[t] } else { -grad[t] };
        if beta[t] >= c {
            if pos {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if beta[t] <= 0.0 {
            if pos {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

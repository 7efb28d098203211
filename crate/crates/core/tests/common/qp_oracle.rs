//! Dense log-barrier solve of the ε-SVR dual, used as an independent
//! reference for the SMO solver.
#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sewercast::svr::{rbf_kernel, SvrHyperparams};

/// Solves `A v = r` by Gaussian elimination with partial pivoting.
pub fn gauss(mut a: Vec<Vec<f64>>, mut r: Vec<f64>) -> Vec<f64> {
    let n = r.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                let (top, bottom) = a.split_at_mut(row);
                for (x, p) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                    *x -= f * p;
                }
                r[row] -= f * r[col];
            }
        }
    }
    let mut v = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * v[k]).sum();
        v[row] = (r[row] - s) / a[row][row];
    }
    v
}

pub struct Oracle {
    pub coef: Vec<f64>,
    pub b: f64,
}

/// Barrier method on `min ½βᵀQβ + pᵀβ, yᵀβ = 0, 0 < β < C`, worked in
/// `u = β / C`. The intercept is the multiplier of the equality constraint.
pub fn oracle(x: &Array2<f64>, z: &[f64], gamma: f64, c: f64, eps: f64) -> Oracle {
    let n = z.len();
    let l = 2 * n;
    let kern = |i: usize, j: usize| {
        let mut d2 = 0.0;
        for k in 0..x.ncols() {
            d2 += (x[[i, k]] - x[[j, k]]).powi(2);
        }
        (-gamma * d2).exp()
    };
    let y: Vec<f64> = (0..l).map(|t| if t < n { 1.0 } else { -1.0 }).collect();
    // objective in u: ½ c uᵀQu + pᵀu (the original divided by c)
    let q: Vec<Vec<f64>> = (0..l)
        .map(|s| (0..l).map(|t| c * y[s] * y[t] * kern(s % n, t % n)).collect())
        .collect();
    let p: Vec<f64> = (0..l)
        .map(|t| if t < n { eps - z[t] } else { eps + z[t - n] })
        .collect();
    let objective = |u: &[f64], t: f64| {
        let mut quad = 0.0;
        for s in 0..l {
            for v in 0..l {
                quad += u[s] * q[s][v] * u[v];
            }
        }
        let lin: f64 = (0..l).map(|s| p[s] * u[s]).sum();
        let barrier: f64 = u.iter().map(|&b| -(b.ln() + (1.0 - b).ln())).sum();
        t * (0.5 * quad + lin) + barrier
    };

    let mut u = vec![0.5; l];
    let mut t = 1.0;
    let mut nu = 0.0;
    loop {
        for _ in 0..500 {
            let qu: Vec<f64> = (0..l).map(|s| (0..l).map(|v| q[s][v] * u[v]).sum()).collect();
            let g: Vec<f64> = (0..l)
                .map(|s| t * (qu[s] + p[s]) - 1.0 / u[s] + 1.0 / (1.0 - u[s]))
                .collect();
            let mut kkt = vec![vec![0.0; l + 1]; l + 1];
            for s in 0..l {
                for v in 0..l {
                    kkt[s][v] = t * q[s][v];
                }
                kkt[s][s] += 1.0 / u[s].powi(2) + 1.0 / (1.0 - u[s]).powi(2);
                kkt[s][l] = y[s];
                kkt[l][s] = y[s];
            }
            let mut rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            rhs.push(0.0);
            let sol = gauss(kkt, rhs);
            let step = &sol[..l];
            nu = sol[l] / t;
            let decrement: f64 = -(0..l).map(|s| g[s] * step[s]).sum::<f64>();
            if decrement / 2.0 < 1e-13 {
                break;
            }
            let mut a: f64 = 1.0;
            while (0..l).any(|s| {
                let v = u[s] + a * step[s];
                v <= 0.0 || v >= 1.0
            }) {
                a *= 0.5;
            }
            let f0 = objective(&u, t);
            while a > 1e-14 {
                let trial: Vec<f64> = (0..l).map(|s| u[s] + a * step[s]).collect();
                if objective(&trial, t) <= f0 - 0.25 * a * decrement {
                    u = trial;
                    break;
                }
                a *= 0.5;
            }
        }
        if (l as f64) / t < 1e-10 {
            break;
        }
        t *= 4.0;
    }
    // with no free variable every intercept in [lo, hi] is optimal; take
    // the middle, as the model does
    let free = u.iter().any(|&v| v > 1e-7 && v < 1.0 - 1e-7);
    if !free {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let f: f64 = (0..n).map(|k| c * (u[k] - u[k + n]) * kern(i, k)).sum();
            // residual z - f - b is >= eps at +C, <= -eps at -C, inside
            // the tube otherwise
            let a = u[i] - u[i + n];
            if a > 0.5 {
                hi = hi.min(z[i] - f - eps);
            } else if a < -0.5 {
                lo = lo.max(z[i] - f + eps);
            } else {
                lo = lo.max(z[i] - f - eps);
                hi = hi.min(z[i] - f + eps);
            }
        }
        nu = (lo + hi) / 2.0;
    }
    Oracle {
        coef: (0..n).map(|k| c * (u[k] - u[k + n])).collect(),
        b: nu,
    }
}

pub fn oracle_predict(o: &Oracle, x: &Array2<f64>, gamma: f64, q: &[f64]) -> f64 {
    let mut s = o.b;
    for (i, a) in o.coef.iter().enumerate() {
        let xi: Vec<f64> = x.row(i).to_vec();
        s += a * rbf_kernel(&xi, q, gamma).unwrap();
    }
    s
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> (Array2<f64>, Vec<f64>, SvrHyperparams) {
    let n = rng.random_range(2..=20);
    let d = rng.random_range(1..=4);
    let x: Array2<f64> = Array2::from_shape_simple_fn((n, d), || rng.random_range(0.0..1.0));
    let z: Vec<f64> = (0..n)
        .map(|i| (3.0f64 * x[[i, 0]]).sin() * 0.4 + 0.5 + rng.random_range(-0.05..0.05))
        .collect();
    let hyper = SvrHyperparams {
        gamma: rng.random_range(0.1..3.0),
        c: rng.random_range(0.2..10.0),
        epsilon: rng.random_range(0.0..0.08),
    };
    (x, z, hyper)
}

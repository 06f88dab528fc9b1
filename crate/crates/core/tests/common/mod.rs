//! Independent reference implementations shared by the integration tests.
#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use nalgebra::{DMatrix, DVector};
use projpred::rng::derived_rng;
use projpred::sampler::DrawSet;
use projpred::Dataset;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

pub fn normal(rng: &mut projpred::rng::Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Gaussian predictors and response of an arbitrary linear model.
pub fn random_dataset(n: usize, m: usize, seed: u64) -> Dataset {
    let mut rng = derived_rng(seed, "test-data", 0);
    let x = DMatrix::from_fn(n, m, |_, _| normal(&mut rng));
    let w: Vec<f64> = (0..m).map(|_| normal(&mut rng)).collect();
    let y = DVector::from_fn(n, |i, _| {
        (0..m).map(|j| x[(i, j)] * w[j]).sum::<f64>() + 0.5 * normal(&mut rng)
    });
    Dataset::from_matrix(x, y).unwrap()
}

/// Arbitrary draws: weights with every predictor weight at least 0.5 in
/// magnitude and noise variances in `[0.5, 2]`.
pub fn random_draws(m: usize, s: usize, seed: u64) -> DrawSet {
    let mut rng = derived_rng(seed, "test-draws", 0);
    let w = DMatrix::from_fn(s, m + 1, |_, j| {
        let v = normal(&mut rng);
        if j == 0 {
            v
        } else {
            v.signum() * (0.5 + v.abs())
        }
    });
    let sigma2 = (0..s).map(|_| rng.random_range(0.5..2.0)).collect();
    DrawSet::new(w, sigma2).unwrap()
}

/// Sample-average KL from `N(f_i, sigma2)` to `N(x_i'v, exp(t))` and its gradient.
fn kl_objective(xs: &DMatrix<f64>, f: &DVector<f64>, sigma2: f64, v: &DVector<f64>, t: f64) -> (f64, DVector<f64>) {
    let n = f.len() as f64;
    let k = xs.ncols();
    let mut value = 0.0;
    let mut grad = DVector::zeros(k + 1);
    let inv = (-t).exp();
    for i in 0..f.len() {
        let pred: f64 = (0..k).map(|j| xs[(i, j)] * v[j]).sum();
        let r = f[i] - pred;
        value += 0.5 * (t - sigma2.ln() + (sigma2 + r * r) * inv - 1.0);
        for j in 0..k {
            grad[j] -= r * xs[(i, j)] * inv;
        }
        grad[k] += 0.5 * (1.0 - (sigma2 + r * r) * inv);
    }
    (value / n, grad / n)
}

fn solve_dense(mut a: DMatrix<f64>, mut b: DVector<f64>) -> DVector<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
            .unwrap();
        a.swap_rows(col, piv);
        b.swap_rows(col, piv);
        for row in col + 1..n {
            let factor = a[(row, col)] / a[(col, col)];
            for c in col..n {
                a[(row, c)] -= factor * a[(col, c)];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = DVector::zeros(n);
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|c| a[(row, c)] * x[c]).sum();
        x[row] = (b[row] - tail) / a[(row, row)];
    }
    x
}

pub struct NumericProjection {
    pub w_perp: Vec<f64>,
    pub sigma2_perp: f64,
    pub kl: f64,
}

/// Minimizes the sample-average KL numerically: damped Newton steps on
/// `(v, ln s2)` with a finite-difference Hessian of the analytic gradient.
pub fn minimize_kl(xs: &DMatrix<f64>, f: &DVector<f64>, sigma2: f64) -> NumericProjection {
    let k = xs.ncols();
    let n = f.len() as f64;
    let fbar = f.sum() / n;
    let fvar = f.iter().map(|v| (v - fbar).powi(2)).sum::<f64>() / n;
    let mut theta = DVector::zeros(k + 1);
    theta[0] = fbar;
    theta[k] = (sigma2 + fvar).ln();
    let eval = |th: &DVector<f64>| kl_objective(xs, f, sigma2, &th.rows(0, k).into_owned(), th[k]);
    for _ in 0..200 {
        let (value, g) = eval(&theta);
        if g.norm() < 1e-14 {
            break;
        }
        let mut h = DMatrix::zeros(k + 1, k + 1);
        for j in 0..=k {
            let step = 1e-6 * theta[j].abs().max(1.0);
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[j] += step;
            down[j] -= step;
            let dg = (eval(&up).1 - eval(&down).1) / (2.0 * step);
            h.set_column(j, &dg);
        }
        let h = (&h + h.transpose()) * 0.5;
        let mut dir = solve_dense(h, -&g);
        if !(dir.dot(&g) < 0.0) {
            dir = -&g;
        }
        let mut scale = 1.0;
        let mut moved = false;
        while scale > 1e-12 {
            let cand = &theta + &dir * scale;
            if eval(&cand).0 <= value + 1e-4 * scale * dir.dot(&g) {
                theta = cand;
                moved = true;
                break;
            }
            scale *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let (value, _) = eval(&theta);
    NumericProjection {
        w_perp: theta.rows(0, k).iter().copied().collect(),
        sigma2_perp: theta[k].exp(),
        kl: value,
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// `|a - b| / |b|` in the Euclidean norm.
pub fn rel_err_vec(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(f64::MIN_POSITIVE)
}

/// MLPD by direct summation of densities, no log-sum-exp.
pub fn mlpd_loop(y: &[f64], mean: &DMatrix<f64>, var: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..y.len() {
        let mut dens = 0.0;
        for s in 0..var.len() {
            let r = y[i] - mean[(i, s)];
            dens += (-r * r / (2.0 * var[s])).exp() / (2.0 * std::f64::consts::PI * var[s]).sqrt();
        }
        total += (dens / var.len() as f64).ln();
    }
    total / y.len() as f64
}

pub fn mse_loop(y: &[f64], mean: &DMatrix<f64>) -> f64 {
    let mut total = 0.0;
    for i in 0..y.len() {
        let mut avg = 0.0;
        for s in 0..mean.ncols() {
            avg += mean[(i, s)];
        }
        avg /= mean.ncols() as f64;
        total += (y[i] - avg) * (y[i] - avg);
    }
    total / y.len() as f64
}

/// Design matrix with the constant column first.
pub fn design(ds: &Dataset) -> DMatrix<f64> {
    let (n, m) = ds.x().shape();
    DMatrix::from_fn(n, m + 1, |i, j| if j == 0 { 1.0 } else { ds.x()[(i, j - 1)] })
}

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subpost::model::{Dataset, Model};
use subpost::models::{LogisticRow, MixtureRow};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central-difference gradient of `f`.
pub fn fd_grad(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let h = 1e-6 * (1.0 + x[j].abs());
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[j] += h;
            b[j] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

/// Sum of per-row log-likelihoods plus the log prior, by direct loop.
pub fn loop_log_post<M: Model>(model: &M, rows: &[M::Row], theta: &[f64], lw: f64, pw: f64) -> f64 {
    lw * rows.iter().map(|r| model.log_lik(theta, r)).sum::<f64>() + pw * model.log_prior(theta)
}

pub fn loop_grad<M: Model>(model: &M, rows: &[M::Row], theta: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; model.dim()];
    for r in rows {
        model.add_grad_log_lik(theta, r, 1.0, &mut g);
    }
    model.add_grad_log_prior(theta, 1.0, &mut g);
    g
}

pub fn loop_hess<M: Model>(model: &M, rows: &[M::Row], theta: &[f64]) -> DMatrix<f64> {
    let d = model.dim();
    let mut h = DMatrix::zeros(d, d);
    for r in rows {
        model.add_hess_log_lik(theta, r, 1.0, &mut h);
    }
    model.add_hess_log_prior(theta, 1.0, &mut h);
    h
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

pub fn bernoulli_rows(n: usize, p: f64, seed: u64) -> Vec<u8> {
    let mut r = rng(seed);
    (0..n).map(|_| u8::from(r.gen::<f64>() < p)).collect()
}

pub fn gaussian_rows(n: usize, seed: u64) -> Vec<f64> {
    use rand_distr::{Distribution, Normal};
    let mut r = rng(seed);
    let d = Normal::new(2.0, 1.5).unwrap();
    (0..n).map(|_| d.sample(&mut r)).collect()
}

pub fn logistic_rows(n: usize, p: usize, seed: u64) -> Vec<LogisticRow> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let mut x = vec![1.0];
            x.extend((1..p).map(|_| r.gen::<f64>() - 0.5));
            let eta: f64 = x.iter().enumerate().map(|(j, v)| v * (j as f64 - 1.0)).sum();
            let y = u8::from(r.gen::<f64>() < 1.0 / (1.0 + (-eta).exp()));
            LogisticRow { x, y }
        })
        .collect()
}

pub fn mixture_rows(n: usize, seed: u64) -> Vec<MixtureRow> {
    use rand_distr::{Distribution, Normal};
    let mut r = rng(seed);
    let z = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|_| {
            let (x1, x2) = (z.sample(&mut r), z.sample(&mut r));
            let y = if r.gen::<f64>() < 0.05 {
                z.sample(&mut r) * 10f64.sqrt()
            } else {
                2.0 * x1 + 5.0 * x2 + z.sample(&mut r)
            };
            MixtureRow { x1, x2, y }
        })
        .collect()
}

pub fn dataset<R: Clone>(rows: Vec<R>) -> Dataset<R> {
    Dataset::new(rows).unwrap()
}

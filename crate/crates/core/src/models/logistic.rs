use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::model::{LogDensity, Model};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRow {
    pub x: Vec<f64>,
    pub y: u8,
}

/// `log sigmoid(eta)` without overflow or premature rounding to zero.
pub fn log_sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        -(-eta).exp().ln_1p()
    } else {
        eta - eta.exp().ln_1p()
    }
}

pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Bayesian logistic regression `P(y = 1 | x, theta) = sigmoid(x' theta)` with
/// a flat prior. No intercept is added; supply a constant column if needed.
#[derive(Debug, Clone)]
pub struct LogisticModel {
    p: usize,
}

impl LogisticModel {
    pub fn new(p: usize) -> Self {
        assert!(p >= 1, "logistic model needs at least one coefficient");
        Self { p }
    }

    fn eta(theta: &[f64], x: &[f64]) -> f64 {
        theta.iter().zip(x).map(|(t, v)| t * v).sum()
    }
}

impl Model for LogisticModel {
    type Row = LogisticRow;

    fn dim(&self) -> usize {
        self.p
    }

    fn component_names(&self) -> Vec<String> {
        (1..=self.p).map(|j| format!("theta{j}")).collect()
    }

    fn log_lik(&self, theta: &[f64], row: &LogisticRow) -> f64 {
        let eta = Self::eta(theta, &row.x);
        if row.y == 1 {
            log_sigmoid(eta)
        } else {
            log_sigmoid(-eta)
        }
    }

    fn add_grad_log_lik(&self, theta: &[f64], row: &LogisticRow, weight: f64, out: &mut [f64]) {
        let r = f64::from(row.y) - sigmoid(Self::eta(theta, &row.x));
        for (o, x) in out.iter_mut().zip(&row.x) {
            *o += weight * r * x;
        }
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn add_hess_log_lik(&self, theta: &[f64], row: &LogisticRow, weight: f64, out: &mut DMatrix<f64>) {
        let s = sigmoid(Self::eta(theta, &row.x));
        let w = weight * s * (1.0 - s);
        for i in 0..self.p {
            let wi = w * row.x[i];
            for j in 0..self.p {
                out[(i, j)] -= wi * row.x[j];
            }
        }
    }

    fn log_prior(&self, _theta: &[f64]) -> f64 {
        0.0
    }

    fn add_grad_log_prior(&self, _theta: &[f64], _weight: f64, _out: &mut [f64]) {}

    fn add_hess_log_prior(&self, _theta: &[f64], _weight: f64, _out: &mut DMatrix<f64>) {}

    fn weighted_target<'a>(
        &'a self,
        rows: &'a [LogisticRow],
        lik_weight: f64,
        _prior_weight: f64,
    ) -> Box<dyn LogDensity + 'a> {
        let mut signed = Vec::with_capacity(rows.len() * self.p);
        for r in rows {
            let s = if r.y == 1 { 1.0 } else { -1.0 };
            signed.extend(r.x.iter().map(|v| s * v));
        }
        Box::new(LogisticTarget {
            p: self.p,
            signed,
            lik_weight,
        })
    }
}

/// Rows stored contiguously as `(2y - 1) x`, so each term is `log sigmoid(z' theta)`.
struct LogisticTarget {
    p: usize,
    signed: Vec<f64>,
    lik_weight: f64,
}

impl LogDensity for LogisticTarget {
    fn dim(&self) -> usize {
        self.p
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        let ll: f64 = self
            .signed
            .chunks_exact(self.p)
            .map(|z| log_sigmoid(LogisticModel::eta(theta, z)))
            .sum();
        if ll.is_nan() {
            f64::NEG_INFINITY
        } else {
            self.lik_weight * ll
        }
    }
}

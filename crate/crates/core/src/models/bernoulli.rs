use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};
use crate::model::{DataShard, Dataset, Model, Scaling};

/// A Beta distribution, used for exact Beta-Bernoulli (sub)posteriors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPosterior {
    pub a: f64,
    pub b: f64,
}

impl BetaPosterior {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Precondition(format!(
                "Beta parameters must be positive and finite, got ({a}, {b})"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn variance(&self) -> f64 {
        let s = self.a + self.b;
        self.a * self.b / (s * s * (s + 1.0))
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return f64::NEG_INFINITY;
        }
        (self.a - 1.0) * x.ln() + (self.b - 1.0) * (-x).ln_1p() - ln_beta(self.a, self.b)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        self.ln_pdf(x).exp()
    }
}

/// Bernoulli likelihood in the success probability `p` with a `Beta(a0, b0)`
/// prior. The conjugate structure is exposed through [`BetaBernoulli`].
#[derive(Debug, Clone, Copy)]
pub struct BernoulliModel {
    a0: f64,
    b0: f64,
    ln_norm: f64,
}

impl BernoulliModel {
    pub fn new(a0: f64, b0: f64) -> Self {
        assert!(a0 > 0.0 && b0 > 0.0);
        Self {
            a0,
            b0,
            ln_norm: ln_beta(a0, b0),
        }
    }

    /// Uniform `Beta(1, 1)` prior.
    pub fn flat() -> Self {
        Self::new(1.0, 1.0)
    }
}

impl Model for BernoulliModel {
    type Row = u8;

    fn dim(&self) -> usize {
        1
    }

    fn component_names(&self) -> Vec<String> {
        vec!["p".into()]
    }

    fn log_lik(&self, theta: &[f64], x: &u8) -> f64 {
        let p = theta[0];
        if !(0.0..=1.0).contains(&p) {
            return f64::NAN;
        }
        if *x == 1 {
            p.ln()
        } else {
            (-p).ln_1p()
        }
    }

    fn add_grad_log_lik(&self, theta: &[f64], x: &u8, weight: f64, out: &mut [f64]) {
        let p = theta[0];
        out[0] += weight * if *x == 1 { 1.0 / p } else { -1.0 / (1.0 - p) };
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn expected_information(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        let p = theta[0];
        (p > 0.0 && p < 1.0).then(|| DMatrix::from_element(1, 1, 1.0 / (p * (1.0 - p))))
    }

    fn add_hess_log_lik(&self, theta: &[f64], x: &u8, weight: f64, out: &mut DMatrix<f64>) {
        let p = theta[0];
        out[(0, 0)] -= weight
            * if *x == 1 {
                1.0 / (p * p)
            } else {
                1.0 / ((1.0 - p) * (1.0 - p))
            };
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        let p = theta[0];
        if p <= 0.0 || p >= 1.0 {
            return f64::NEG_INFINITY;
        }
        (self.a0 - 1.0) * p.ln() + (self.b0 - 1.0) * (-p).ln_1p() - self.ln_norm
    }

    fn add_grad_log_prior(&self, theta: &[f64], weight: f64, out: &mut [f64]) {
        let p = theta[0];
        out[0] += weight * ((self.a0 - 1.0) / p - (self.b0 - 1.0) / (1.0 - p));
    }

    fn add_hess_log_prior(&self, theta: &[f64], weight: f64, out: &mut DMatrix<f64>) {
        let p = theta[0];
        out[(0, 0)] -= weight * ((self.a0 - 1.0) / (p * p) + (self.b0 - 1.0) / ((1.0 - p) * (1.0 - p)));
    }
}

/// Conjugate Beta-Bernoulli model with `Beta(a0, b0)` prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaBernoulli {
    pub a0: f64,
    pub b0: f64,
}

impl Default for BetaBernoulli {
    fn default() -> Self {
        Self { a0: 0.01, b0: 0.01 }
    }
}

fn successes(rows: &[u8]) -> Result<usize> {
    rows.iter().try_fold(0usize, |acc, &x| match x {
        0 => Ok(acc),
        1 => Ok(acc + 1),
        other => Err(Error::Precondition(format!("Bernoulli row must be 0 or 1, got {other}"))),
    })
}

impl BetaBernoulli {
    /// Exact subposterior of one shard.
    ///
    /// Rescaled: `Beta(a0 + K s, b0 + K (M - s))`. Tempered prior:
    /// `Beta(1 + (a0 - 1)/K + s, 1 + (b0 - 1)/K + M - s)`.
    pub fn exact_subposterior(&self, shard: &DataShard<u8>, scaling: Scaling) -> Result<BetaPosterior> {
        let s = successes(shard.rows())? as f64;
        let m = shard.m() as f64;
        let k = shard.replication() as f64;
        match scaling {
            Scaling::Rescaled => BetaPosterior::new(self.a0 + k * s, self.b0 + k * (m - s)),
            Scaling::TemperedPrior => BetaPosterior::new(
                1.0 + (self.a0 - 1.0) / k + s,
                1.0 + (self.b0 - 1.0) / k + (m - s),
            ),
        }
    }

    /// Exact full-data posterior.
    pub fn exact_posterior(&self, data: &Dataset<u8>) -> Result<BetaPosterior> {
        let s = successes(data.rows())? as f64;
        BetaPosterior::new(self.a0 + s, self.b0 + (data.n() as f64 - s))
    }

    pub fn model(&self) -> BernoulliModel {
        BernoulliModel::new(self.a0, self.b0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(n: usize, s: usize) -> Vec<u8> {
        (0..n).map(|i| u8::from(i < s)).collect()
    }

    #[test]
    fn full_data_update() {
        let post = BetaBernoulli::default()
            .exact_posterior(&Dataset::new(rows(10, 3)).unwrap())
            .unwrap();
        assert!((post.a - 3.01).abs() < 1e-12 && (post.b - 7.01).abs() < 1e-12);
    }

    #[test]
    fn rescaled_shard_update() {
        let shard = DataShard::new(rows(5, 2), 4, 1).unwrap();
        let post = BetaBernoulli::default()
            .exact_subposterior(&shard, Scaling::Rescaled)
            .unwrap();
        assert!((post.a - 8.01).abs() < 1e-12 && (post.b - 12.01).abs() < 1e-12);
    }

    #[test]
    fn zero_success_shard() {
        let shard = DataShard::new(rows(7, 0), 3, 0).unwrap();
        let post = BetaBernoulli::default()
            .exact_subposterior(&shard, Scaling::Rescaled)
            .unwrap();
        assert!((post.a - 0.01).abs() < 1e-15);
        assert!((post.b - (0.01 + 21.0)).abs() < 1e-12);
        assert!(post.mean() < 1e-3);
    }

    #[test]
    fn tempered_k1_equals_full() {
        let shard = DataShard::new(rows(9, 4), 1, 0).unwrap();
        let bb = BetaBernoulli::default();
        let a = bb.exact_subposterior(&shard, Scaling::TemperedPrior).unwrap();
        let b = bb.exact_subposterior(&shard, Scaling::Rescaled).unwrap();
        assert!((a.a - b.a).abs() < 1e-12 && (a.b - b.b).abs() < 1e-12);
    }

    #[test]
    fn non_binary_row_rejected() {
        let shard = DataShard::new(vec![0, 2], 1, 0).unwrap();
        assert!(BetaBernoulli::default()
            .exact_subposterior(&shard, Scaling::Rescaled)
            .is_err());
    }

    #[test]
    fn beta_pdf_integrates_to_one() {
        let b = BetaPosterior::new(3.01, 7.01).unwrap();
        let n = 20_000;
        let h = 1.0 / n as f64;
        let total: f64 = (1..n).map(|i| b.pdf(i as f64 * h)).sum::<f64>() * h;
        assert!((total - 1.0).abs() < 1e-6);
    }
}

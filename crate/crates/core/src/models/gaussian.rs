use nalgebra::DMatrix;

use crate::model::{LogDensity, Model};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// `x ~ N(mu, sigma^2)` sampled in `(mu, log sigma)` coordinates under the flat
/// prior `p(mu, log sigma) ∝ 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianModel;

impl GaussianModel {
    pub fn new() -> Self {
        Self
    }

    /// Maximum-likelihood point `(sample mean, log sqrt(biased variance))`.
    pub fn mle(rows: &[f64]) -> [f64; 2] {
        let stats = GaussianStats::from_rows(rows);
        [stats.mean, 0.5 * (stats.m2 / stats.n).ln()]
    }
}

impl Model for GaussianModel {
    type Row = f64;

    fn dim(&self) -> usize {
        2
    }

    fn component_names(&self) -> Vec<String> {
        vec!["mu".into(), "log_sigma".into()]
    }

    fn log_lik(&self, theta: &[f64], x: &f64) -> f64 {
        let (mu, s) = (theta[0], theta[1]);
        let z = (x - mu) * (-s).exp();
        -s - HALF_LN_2PI - 0.5 * z * z
    }

    fn add_grad_log_lik(&self, theta: &[f64], x: &f64, weight: f64, out: &mut [f64]) {
        let (mu, s) = (theta[0], theta[1]);
        let inv_var = (-2.0 * s).exp();
        let r = x - mu;
        out[0] += weight * r * inv_var;
        out[1] += weight * (r * r * inv_var - 1.0);
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn expected_information(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        let prec = (-2.0 * theta[1]).exp();
        Some(DMatrix::from_row_slice(2, 2, &[prec, 0.0, 0.0, 2.0]))
    }

    fn add_hess_log_lik(&self, theta: &[f64], x: &f64, weight: f64, out: &mut DMatrix<f64>) {
        let (mu, s) = (theta[0], theta[1]);
        let inv_var = (-2.0 * s).exp();
        let r = x - mu;
        out[(0, 0)] -= weight * inv_var;
        out[(0, 1)] -= weight * 2.0 * r * inv_var;
        out[(1, 0)] -= weight * 2.0 * r * inv_var;
        out[(1, 1)] -= weight * 2.0 * r * r * inv_var;
    }

    fn log_prior(&self, _theta: &[f64]) -> f64 {
        0.0
    }

    fn add_grad_log_prior(&self, _theta: &[f64], _weight: f64, _out: &mut [f64]) {}

    fn add_hess_log_prior(&self, _theta: &[f64], _weight: f64, _out: &mut DMatrix<f64>) {}

    fn weighted_target<'a>(
        &'a self,
        rows: &'a [f64],
        lik_weight: f64,
        _prior_weight: f64,
    ) -> Box<dyn LogDensity + 'a> {
        Box::new(GaussianTarget {
            stats: GaussianStats::from_rows(rows),
            lik_weight,
        })
    }
}

/// Count, mean and centred sum of squares, accumulated with Welford updates.
#[derive(Debug, Clone, Copy)]
struct GaussianStats {
    n: f64,
    mean: f64,
    m2: f64,
}

impl GaussianStats {
    fn from_rows(rows: &[f64]) -> Self {
        let mut n = 0.0;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for &x in rows {
            n += 1.0;
            let delta = x - mean;
            mean += delta / n;
            m2 += delta * (x - mean);
        }
        Self { n, mean, m2 }
    }
}

struct GaussianTarget {
    stats: GaussianStats,
    lik_weight: f64,
}

impl LogDensity for GaussianTarget {
    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        let (mu, s) = (theta[0], theta[1]);
        let GaussianStats { n, mean, m2 } = self.stats;
        let dm = mean - mu;
        let ss = m2 + n * dm * dm;
        let v = -n * (s + HALF_LN_2PI) - 0.5 * ss * (-2.0 * s).exp();
        if v.is_nan() {
            return f64::NEG_INFINITY;
        }
        self.lik_weight * v
    }
}

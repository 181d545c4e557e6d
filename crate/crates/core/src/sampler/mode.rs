use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeFit {
    pub mode: Vec<f64>,
    /// Inverse negative Hessian at the mode, when it is positive definite.
    pub covariance: Option<DMatrix<f64>>,
    pub converged: bool,
}

struct Weighted<'a, M: Model> {
    model: &'a M,
    rows: &'a [M::Row],
    lik_weight: f64,
    prior_weight: f64,
}

impl<M: Model> Weighted<'_, M> {
    fn value(&self, theta: &[f64]) -> f64 {
        let lp = self.model.log_prior(theta);
        let ll: f64 = self.rows.iter().map(|r| self.model.log_lik(theta, r)).sum();
        let v = self.lik_weight * ll + self.prior_weight * lp;
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    fn grad(&self, theta: &[f64]) -> DVector<f64> {
        let mut g = vec![0.0; self.model.dim()];
        for r in self.rows {
            self.model.add_grad_log_lik(theta, r, self.lik_weight, &mut g);
        }
        self.model.add_grad_log_prior(theta, self.prior_weight, &mut g);
        DVector::from_vec(g)
    }

    fn neg_hess(&self, theta: &[f64]) -> DMatrix<f64> {
        let d = self.model.dim();
        let mut h = DMatrix::zeros(d, d);
        for r in self.rows {
            self.model.add_hess_log_lik(theta, r, -self.lik_weight, &mut h);
        }
        self.model.add_hess_log_prior(theta, -self.prior_weight, &mut h);
        (&h + h.transpose()) * 0.5
    }
}

/// Damped Newton ascent on `lik_weight * sum_j l(theta, x_j) + prior_weight * log pi(theta)`.
///
/// Steps are halved until the objective increases; when the negative Hessian
/// is not positive definite a gradient step is taken instead. Returns the
/// last iterate even if `max_iters` is exhausted.
pub fn find_mode<M: Model>(
    model: &M,
    rows: &[M::Row],
    lik_weight: f64,
    prior_weight: f64,
    init: &[f64],
    max_iters: usize,
) -> Result<ModeFit> {
    if !model.has_hessian() {
        return Err(Error::Config("mode finding needs a model with a Hessian".into()));
    }
    if init.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: init.len(),
        });
    }
    let f = Weighted {
        model,
        rows,
        lik_weight,
        prior_weight,
    };
    let mut theta = DVector::from_column_slice(init);
    let mut value = f.value(theta.as_slice());
    if !value.is_finite() {
        return Err(Error::Initialization);
    }
    let mut converged = false;
    for _ in 0..max_iters {
        let g = f.grad(theta.as_slice());
        let h = f.neg_hess(theta.as_slice());
        let dir = match h.clone().cholesky() {
            Some(ch) => ch.solve(&g),
            None => &g / g.norm().max(1.0),
        };
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let cand = &theta + &dir * t;
            let v = f.value(cand.as_slice());
            if v.is_finite() && v >= value {
                let gain = v - value;
                theta = cand;
                value = v;
                moved = true;
                converged = gain <= 1e-10 * (1.0 + value.abs()) && t == 1.0;
                break;
            }
            t *= 0.5;
        }
        if !moved || converged {
            converged = true;
            break;
        }
    }
    let covariance = f
        .neg_hess(theta.as_slice())
        .cholesky()
        .map(|c| c.inverse())
        .filter(|c| c.iter().all(|v| v.is_finite()));
    Ok(ModeFit {
        mode: theta.as_slice().to_vec(),
        covariance,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BernoulliModel, GaussianModel};

    #[test]
    fn bernoulli_mode_and_curvature() {
        let m = BernoulliModel::flat();
        let rows: Vec<u8> = (0..50).map(|i| u8::from(i % 5 == 0)).collect();
        let fit = find_mode(&m, &rows, 2.0, 1.0, &[0.5], 50).unwrap();
        assert!((fit.mode[0] - 0.2).abs() < 1e-8);
        // -d2/dp2 of 2 * (10 ln p + 40 ln(1-p)) at 0.2 is 2 * 50 / (0.2 * 0.8).
        let var = fit.covariance.unwrap()[(0, 0)];
        assert!((var - 0.16 / 100.0).abs() < 1e-9);
        assert!(fit.converged);
    }

    #[test]
    fn gaussian_mode_is_mle() {
        let m = GaussianModel;
        let rows = vec![1.0, 2.0, 4.0, 7.0];
        let fit = find_mode(&m, &rows, 1.0, 1.0, &[0.0, 0.0], 100).unwrap();
        let mle = GaussianModel::mle(&rows);
        assert!((fit.mode[0] - mle[0]).abs() < 1e-8);
        assert!((fit.mode[1] - mle[1]).abs() < 1e-8);
    }
}

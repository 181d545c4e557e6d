use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

fn check_dims(mu1: &[f64], mu2: &[f64], sigma: &DMatrix<f64>) -> Result<()> {
    let d = mu1.len();
    if mu2.len() != d || sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: mu2.len().max(sigma.nrows()),
        });
    }
    Ok(())
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1.0);
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= 1e-12 * scale))
}

/// KL divergence between `N(mu1, Sigma)` and `N(mu2, Sigma)`:
/// `0.5 (mu1 - mu2)' Sigma^-1 (mu1 - mu2)`.
pub fn gaussian_kl(mu1: &[f64], mu2: &[f64], sigma: &DMatrix<f64>) -> Result<f64> {
    check_dims(mu1, mu2, sigma)?;
    if !is_symmetric(sigma) {
        return Err(Error::NotPositiveDefinite);
    }
    let chol = sigma.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let delta = DVector::from_iterator(mu1.len(), mu1.iter().zip(mu2).map(|(a, b)| a - b));
    let w = chol
        .l()
        .solve_lower_triangular(&delta)
        .ok_or(Error::NotPositiveDefinite)?;
    Ok(0.5 * w.norm_squared())
}

/// KL divergence `KL(N(mu1, s1) || N(mu2, s2))` for arbitrary covariances.
pub fn gaussian_kl_general(
    mu1: &[f64],
    s1: &DMatrix<f64>,
    mu2: &[f64],
    s2: &DMatrix<f64>,
) -> Result<f64> {
    check_dims(mu1, mu2, s1)?;
    check_dims(mu1, mu2, s2)?;
    let d = mu1.len() as f64;
    let c1 = s1.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let c2 = s2.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let s2_inv = c2.inverse();
    let delta = DVector::from_iterator(mu1.len(), mu2.iter().zip(mu1).map(|(a, b)| a - b));
    let log_det = |c: &nalgebra::Cholesky<f64, nalgebra::Dyn>| {
        2.0 * c.l().diagonal().iter().map(|v| v.ln()).sum::<f64>()
    };
    let trace = (&s2_inv * s1).trace();
    let quad = (delta.transpose() * &s2_inv * &delta)[(0, 0)];
    Ok(0.5 * (trace + quad - d + log_det(&c2) - log_det(&c1)))
}

/// Upper bound `2 sqrt(KL)` on total variation distance.
pub fn tv_bound_from_kl(kl: f64) -> Result<f64> {
    if !(kl >= 0.0) {
        return Err(Error::NegativeKl(kl));
    }
    Ok(2.0 * kl.sqrt())
}

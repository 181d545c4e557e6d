use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::combine::{CombinedSample, Method};
use crate::error::{Error, Result};
use crate::model::ParameterVector;
use crate::shard::SubposteriorResult;
use crate::stats;

fn invert_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let ch = m.clone().cholesky()?;
    let inv = ch.inverse();
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}

/// Consensus Monte Carlo: draw `t` of the output is
/// `(sum_i W_i)^-1 sum_i W_i theta_i^t` with `W_i` the inverse sample
/// covariance of chain `i`.
///
/// Chains are truncated to the shortest length. If any shard covariance is
/// singular all weights fall back to the identity and a warning is recorded.
pub fn combine_cmc(sub: &SubposteriorResult) -> Result<CombinedSample> {
    let d = sub.dim();
    if let Some(c) = sub.chains.iter().find(|c| c.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: c.dim(),
        });
    }
    let t_min = sub.chains.iter().map(|c| c.len()).min().unwrap_or(0);
    let mut warnings = Vec::new();
    if sub.chains.iter().any(|c| c.len() != t_min) {
        warnings.push(format!("chains truncated to common length {t_min}"));
    }

    let weights: Option<Vec<DMatrix<f64>>> = sub.shard_covs.iter().map(invert_spd).collect();
    let weights = match weights {
        Some(w) => w,
        None => {
            let msg = Error::SingularCovariance.to_string() + "; using identity weights";
            warn!("{msg}");
            warnings.push(msg);
            vec![DMatrix::identity(d, d); sub.k()]
        }
    };
    let total: DMatrix<f64> = weights.iter().fold(DMatrix::zeros(d, d), |acc, w| acc + w);
    let total_inv = total
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| total.try_inverse())
        .ok_or(Error::SingularCovariance)?;
    // Pre-multiply so each output draw is sum_i A_i theta_i^t.
    let mixers: Vec<DMatrix<f64>> = weights.iter().map(|w| &total_inv * w).collect();

    let mut draws = Vec::with_capacity(t_min * d);
    let mut acc = DVector::zeros(d);
    for t in 0..t_min {
        acc.fill(0.0);
        for (chain, a) in sub.chains.iter().zip(&mixers) {
            let x = DVector::from_column_slice(chain.row(t));
            acc.gemv(1.0, a, &x, 1.0);
        }
        draws.extend(acc.iter());
    }
    let center = ParameterVector::new(stats::column_means(&draws, d), sub.names().to_vec())?;
    let mut out = CombinedSample::new(draws, center, Method::Cmc);
    out.warnings = warnings;
    Ok(out)
}

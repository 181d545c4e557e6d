//! Comparison of the `N`-scaled covariance of a combined sample with inverse
//! Fisher information.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::combine::CombinedSample;
use crate::error::{Error, Result};
use crate::model::{observed_information, DataShard, Model};
use crate::shard::SubposteriorResult;
use crate::stats::relative_frobenius;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InformationSource {
    /// Closed-form expected information of the model.
    Expected,
    /// Mean observed information over the full data.
    Observed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub n: usize,
    /// `N cov(combined draws)`.
    pub scaled_covariance: Vec<Vec<f64>>,
    /// `(1/K) sum_i I_i^-1` with `I_i` the observed information of shard `i`
    /// at its subposterior mean.
    pub shard_inverse_information: Vec<Vec<f64>>,
    /// `I^-1` at the combined center.
    pub inverse_information: Vec<Vec<f64>>,
    pub information_source: InformationSource,
    /// Relative Frobenius discrepancy of the scaled covariance against the shard average.
    pub covariance_vs_shard: f64,
    /// Relative Frobenius discrepancy of the scaled covariance against `I^-1`.
    pub covariance_vs_inverse: f64,
    /// Relative Frobenius discrepancy of the shard average against `I^-1`.
    pub shard_vs_inverse: f64,
}

fn invert(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let inv = m
        .clone()
        .cholesky()
        .ok_or(Error::SingularInformation)?
        .inverse();
    if inv.iter().all(|v| v.is_finite()) {
        Ok(inv)
    } else {
        Err(Error::SingularInformation)
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Computes the three covariance estimates of the check and their pairwise
/// discrepancies. `shards` must be the shards that produced `sub`.
pub fn fisher_covariance_check<M: Model>(
    model: &M,
    shards: &[DataShard<M::Row>],
    sub: &SubposteriorResult,
    combined: &CombinedSample,
    n: usize,
) -> Result<CheckReport> {
    if !model.has_hessian() {
        return Err(Error::Config("information check needs a model with a Hessian".into()));
    }
    if shards.len() != sub.k() {
        return Err(Error::Precondition(format!(
            "{} shards for {} subposteriors",
            shards.len(),
            sub.k()
        )));
    }
    let d = model.dim();
    if combined.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: combined.dim(),
        });
    }
    let scaled = combined.covariance() * n as f64;

    let mut shard_avg = DMatrix::zeros(d, d);
    for (shard, mean) in shards.iter().zip(&sub.shard_means) {
        let info = observed_information(model, shard.rows(), mean.values())?;
        shard_avg += invert(&info)?;
    }
    shard_avg /= sub.k() as f64;

    let center = combined.center.values();
    let (info, source) = match model.expected_information(center) {
        Some(i) => (i, InformationSource::Expected),
        None => {
            let rows: Vec<M::Row> = shards.iter().flat_map(|s| s.rows().iter().cloned()).collect();
            (observed_information(model, &rows, center)?, InformationSource::Observed)
        }
    };
    let inverse = invert(&info)?;

    Ok(CheckReport {
        n,
        covariance_vs_shard: relative_frobenius(&scaled, &shard_avg),
        covariance_vs_inverse: relative_frobenius(&scaled, &inverse),
        shard_vs_inverse: relative_frobenius(&shard_avg, &inverse),
        scaled_covariance: rows_of(&scaled),
        shard_inverse_information: rows_of(&shard_avg),
        inverse_information: rows_of(&inverse),
        information_source: source,
    })
}

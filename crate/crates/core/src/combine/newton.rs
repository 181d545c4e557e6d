use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{grad_log_post, hess_log_post, DataShard, Model, ParameterVector};

/// Condition numbers above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonTrace {
    pub iterates: Vec<Vec<f64>>,
    pub gradient_norms: Vec<f64>,
    pub converged: bool,
}

/// Solves `H x = g` through the symmetric eigendecomposition of `H`.
fn symmetric_solve(h: &DMatrix<f64>, g: &DVector<f64>) -> Result<DVector<f64>> {
    let sym = (h + h.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let abs: Vec<f64> = eig.eigenvalues.iter().map(|l| l.abs()).collect();
    let max = abs.iter().cloned().fold(0.0, f64::max);
    let min = abs.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularHessian { condition });
    }
    let vt_g = eig.eigenvectors.transpose() * g;
    let scaled = DVector::from_iterator(
        vt_g.len(),
        vt_g.iter().zip(eig.eigenvalues.iter()).map(|(v, l)| v / l),
    );
    Ok(&eig.eigenvectors * scaled)
}

/// Newton-Raphson on the full-data log posterior, starting from `init`.
///
/// Gradients and Hessians are accumulated shard by shard. Stops once the
/// gradient norm drops below `tol` or after `max_iters` steps. On
/// [`Error::SingularHessian`] or [`Error::NonFiniteStep`] the caller keeps
/// `init` as the center.
pub fn refine_center_newton<M: Model>(
    model: &M,
    shards: &[DataShard<M::Row>],
    init: &ParameterVector,
    max_iters: usize,
    tol: f64,
) -> Result<(ParameterVector, NewtonTrace)> {
    if !model.has_hessian() {
        return Err(Error::Config(
            "Newton refinement needs a model with an analytic Hessian".into(),
        ));
    }
    if init.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: init.dim(),
        });
    }
    let mut theta = init.to_dvector();
    let mut g = grad_log_post(model, shards, theta.as_slice())?;
    let mut trace = NewtonTrace {
        iterates: vec![theta.as_slice().to_vec()],
        gradient_norms: vec![g.norm()],
        converged: g.norm() < tol,
    };
    for _ in 0..max_iters {
        if trace.converged {
            break;
        }
        let h = hess_log_post(model, shards, theta.as_slice())?;
        let step = symmetric_solve(&h, &g)?;
        let next = &theta - step;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteStep);
        }
        let next_g = grad_log_post(model, shards, next.as_slice()).map_err(|_| Error::NonFiniteStep)?;
        theta = next;
        g = next_g;
        trace.iterates.push(theta.as_slice().to_vec());
        trace.gradient_norms.push(g.norm());
        trace.converged = g.norm() < tol;
    }
    Ok((init.with_values(theta.as_slice().to_vec())?, trace))
}

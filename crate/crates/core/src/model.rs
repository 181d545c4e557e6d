//! Parameter, data and model abstractions shared by samplers and combiners.
//!
//! A [`Model`] supplies the per-observation log-likelihood (with gradient and,
//! optionally, Hessian) and the prior. Everything is evaluated in log space;
//! no density is exponentiated before summation.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in parameter space with one label per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    values: Vec<f64>,
    names: Vec<String>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>, names: Vec<String>) -> Result<Self> {
        if values.len() != names.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("parameter component '{}'", names[i])));
        }
        Ok(Self { values, names })
    }

    /// Labels the coordinates `theta[0]`, `theta[1]`, ...
    pub fn unnamed(values: Vec<f64>) -> Result<Self> {
        let names = (0..values.len()).map(|i| format!("theta[{i}]")).collect();
        Self::new(values, names)
    }

    pub fn for_model<M: Model + ?Sized>(model: &M, values: Vec<f64>) -> Result<Self> {
        Self::new(values, model.component_names())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.names.clone())
    }
}

/// The full set of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<R> {
    rows: Vec<R>,
}

impl<R> Dataset<R> {
    pub fn new(rows: Vec<R>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Precondition("dataset must contain at least one row".into()));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[R] {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn into_rows(self) -> Vec<R> {
        self.rows
    }
}

/// One of `K` equal-size blocks of a [`Dataset`].
///
/// `index` is zero based. `replication` is the number of shards `K`, which is
/// also the exponent applied to the shard likelihood in the rescaled target.
#[derive(Debug, Clone, PartialEq)]
pub struct DataShard<R> {
    rows: Vec<R>,
    replication: usize,
    index: usize,
}

impl<R> DataShard<R> {
    pub fn new(rows: Vec<R>, replication: usize, index: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Precondition("shard must contain at least one row".into()));
        }
        if replication == 0 {
            return Err(Error::Precondition("replication factor must be >= 1".into()));
        }
        if index >= replication {
            return Err(Error::Precondition(format!(
                "shard index {index} out of range for K = {replication}"
            )));
        }
        Ok(Self {
            rows,
            replication,
            index,
        })
    }

    /// The whole dataset as a single shard with `K = 1`.
    pub fn whole(data: &Dataset<R>) -> Self
    where
        R: Clone,
    {
        Self {
            rows: data.rows.clone(),
            replication: 1,
            index: 0,
        }
    }

    pub fn rows(&self) -> &[R] {
        &self.rows
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn replication(&self) -> usize {
        self.replication
    }

    pub fn index(&self) -> usize {
        self.index
    }
}

/// A log density over `R^d`, possibly unnormalised.
pub trait LogDensity: Send + Sync {
    fn dim(&self) -> usize;
    fn log_density(&self, theta: &[f64]) -> f64;
}

/// Wraps a closure as a [`LogDensity`].
pub struct FnDensity<F> {
    dim: usize,
    f: F,
}

impl<F> FnDensity<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> LogDensity for FnDensity<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        (self.f)(theta)
    }
}

/// How a shard's likelihood and the prior are weighted in a subposterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// `K * l_i(theta) + log pi(theta)`: each shard datum counted `K` times.
    Rescaled,
    /// `l_i(theta) + log pi(theta) / K`: the product-decomposition used by
    /// consensus Monte Carlo.
    TemperedPrior,
}

impl Scaling {
    /// `(likelihood weight, prior weight)` for `k` shards.
    pub fn weights(self, k: usize) -> (f64, f64) {
        let k = k as f64;
        match self {
            Scaling::Rescaled => (k, 1.0),
            Scaling::TemperedPrior => (1.0, 1.0 / k),
        }
    }
}

/// An i.i.d. likelihood plus prior.
///
/// Gradient and Hessian methods *add* their contribution into the output
/// buffer so that sums over rows need no temporaries.
pub trait Model: Send + Sync {
    type Row: Clone + Send + Sync;

    fn dim(&self) -> usize;

    fn component_names(&self) -> Vec<String>;

    fn log_lik(&self, theta: &[f64], row: &Self::Row) -> f64;

    fn add_grad_log_lik(&self, theta: &[f64], row: &Self::Row, weight: f64, out: &mut [f64]);

    fn has_hessian(&self) -> bool {
        false
    }

    /// Adds `weight * Hess log f(row | theta)`. Only called when
    /// [`Model::has_hessian`] is true.
    fn add_hess_log_lik(
        &self,
        _theta: &[f64],
        _row: &Self::Row,
        _weight: f64,
        _out: &mut DMatrix<f64>,
    ) {
        unimplemented!("model does not provide a Hessian")
    }

    fn log_prior(&self, theta: &[f64]) -> f64;

    fn add_grad_log_prior(&self, theta: &[f64], weight: f64, out: &mut [f64]);

    fn add_hess_log_prior(&self, _theta: &[f64], _weight: f64, _out: &mut DMatrix<f64>) {
        unimplemented!("model does not provide a Hessian")
    }

    /// Per-observation Fisher information `E[-Hess l(theta, X)]`, when known in
    /// closed form.
    fn expected_information(&self, _theta: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// A sampler-facing target `lik_weight * sum_j l(theta, x_j) + prior_weight * log pi(theta)`.
    ///
    /// Models may override this with a sufficient-statistic form; the result
    /// must agree with the row loop up to rounding.
    fn weighted_target<'a>(
        &'a self,
        rows: &'a [Self::Row],
        lik_weight: f64,
        prior_weight: f64,
    ) -> Box<dyn LogDensity + 'a>
    where
        Self: Sized,
    {
        Box::new(RowLoopTarget {
            model: self,
            rows,
            lik_weight,
            prior_weight,
        })
    }
}

struct RowLoopTarget<'a, M: Model> {
    model: &'a M,
    rows: &'a [M::Row],
    lik_weight: f64,
    prior_weight: f64,
}

impl<M: Model> LogDensity for RowLoopTarget<'_, M> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        let lp = self.model.log_prior(theta);
        if !lp.is_finite() {
            return f64::NEG_INFINITY;
        }
        let ll: f64 = self.rows.iter().map(|r| self.model.log_lik(theta, r)).sum();
        if ll.is_nan() {
            return f64::NEG_INFINITY;
        }
        self.lik_weight * ll + self.prior_weight * lp
    }
}

/// The subposterior target for `shard` under the given scaling.
pub fn shard_target<'a, M: Model>(
    model: &'a M,
    shard: &'a DataShard<M::Row>,
    scaling: Scaling,
) -> Box<dyn LogDensity + 'a> {
    let (lw, pw) = scaling.weights(shard.replication());
    model.weighted_target(shard.rows(), lw, pw)
}

fn check_dim<M: Model + ?Sized>(model: &M, theta: &[f64]) -> Result<()> {
    if theta.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: theta.len(),
        });
    }
    Ok(())
}

fn sum_log_lik<M: Model>(model: &M, rows: &[M::Row], theta: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (j, row) in rows.iter().enumerate() {
        let v = model.log_lik(theta, row);
        if !v.is_finite() {
            return Err(Error::Numerical { row: j, value: v });
        }
        total += v;
    }
    Ok(total)
}

fn checked_prior<M: Model>(model: &M, theta: &[f64]) -> Result<f64> {
    let lp = model.log_prior(theta);
    if !lp.is_finite() {
        return Err(Error::NonFinite("log prior".into()));
    }
    Ok(lp)
}

/// `sum_j log f(x_ij | theta)` over the rows of one shard.
pub fn shard_log_lik<M: Model>(model: &M, shard: &DataShard<M::Row>, theta: &[f64]) -> Result<f64> {
    check_dim(model, theta)?;
    sum_log_lik(model, shard.rows(), theta)
}

/// `K * shard_log_lik + log pi(theta)`, unnormalised.
pub fn rescaled_log_post<M: Model>(
    model: &M,
    shard: &DataShard<M::Row>,
    theta: &[f64],
) -> Result<f64> {
    let ll = shard_log_lik(model, shard, theta)?;
    let lp = checked_prior(model, theta)?;
    Ok(shard.replication() as f64 * ll + lp)
}

/// Full-data log posterior `L_N(theta) + log pi(theta)`, unnormalised.
pub fn full_log_post<M: Model>(model: &M, data: &Dataset<M::Row>, theta: &[f64]) -> Result<f64> {
    check_dim(model, theta)?;
    let ll = sum_log_lik(model, data.rows(), theta)?;
    let lp = checked_prior(model, theta)?;
    Ok(ll + lp)
}

/// Gradient of the full-data log posterior, accumulated over `shards` in
/// parallel and reduced in shard order.
pub fn grad_log_post<M: Model>(
    model: &M,
    shards: &[DataShard<M::Row>],
    theta: &[f64],
) -> Result<DVector<f64>> {
    check_dim(model, theta)?;
    let d = model.dim();
    let partials: Vec<Vec<f64>> = shards
        .par_iter()
        .map(|s| {
            let mut g = vec![0.0; d];
            for row in s.rows() {
                model.add_grad_log_lik(theta, row, 1.0, &mut g);
            }
            g
        })
        .collect();
    let mut g: DVector<f64> = DVector::zeros(d);
    for p in &partials {
        for (gi, pi) in g.iter_mut().zip(p) {
            *gi += pi;
        }
    }
    let mut prior = vec![0.0; d];
    model.add_grad_log_prior(theta, 1.0, &mut prior);
    for (gi, pi) in g.iter_mut().zip(&prior) {
        *gi += pi;
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("log-posterior gradient".into()));
    }
    Ok(g)
}

/// Hessian of the full-data log posterior, accumulated like [`grad_log_post`].
pub fn hess_log_post<M: Model>(
    model: &M,
    shards: &[DataShard<M::Row>],
    theta: &[f64],
) -> Result<DMatrix<f64>> {
    check_dim(model, theta)?;
    if !model.has_hessian() {
        return Err(Error::Config("model does not provide a Hessian".into()));
    }
    let d = model.dim();
    let partials: Vec<DMatrix<f64>> = shards
        .par_iter()
        .map(|s| {
            let mut h = DMatrix::zeros(d, d);
            for row in s.rows() {
                model.add_hess_log_lik(theta, row, 1.0, &mut h);
            }
            h
        })
        .collect();
    let mut h = DMatrix::zeros(d, d);
    for p in &partials {
        h += p;
    }
    model.add_hess_log_prior(theta, 1.0, &mut h);
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("log-posterior Hessian".into()));
    }
    Ok(h)
}

/// Mean per-observation observed information `-(1/M) sum_j Hess l(theta, x_j)`.
pub fn observed_information<M: Model>(model: &M, rows: &[M::Row], theta: &[f64]) -> Result<DMatrix<f64>> {
    check_dim(model, theta)?;
    if !model.has_hessian() {
        return Err(Error::Config("model does not provide a Hessian".into()));
    }
    let d = model.dim();
    let mut h = DMatrix::zeros(d, d);
    let w = -1.0 / rows.len() as f64;
    for row in rows {
        model.add_hess_log_lik(theta, row, w, &mut h);
    }
    Ok(h)
}

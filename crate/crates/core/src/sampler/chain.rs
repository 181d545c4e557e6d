use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Post-burn-in draws of one chain, stored row-major (`T x d`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDraws {
    data: Vec<f64>,
    dim: usize,
    pub shard_index: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub acceptance_rate: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ChainDraws {
    pub fn new(
        data: Vec<f64>,
        dim: usize,
        shard_index: usize,
        seed: u64,
        burn_in: usize,
        acceptance_rate: f64,
    ) -> Result<Self> {
        if dim == 0 || data.is_empty() || data.len() % dim != 0 {
            return Err(Error::Precondition(format!(
                "draw buffer of length {} is not a nonempty multiple of d = {dim}",
                data.len()
            )));
        }
        if !(0.0..=1.0).contains(&acceptance_rate) {
            return Err(Error::Precondition(format!(
                "acceptance rate {acceptance_rate} outside [0, 1]"
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("draw {} of shard {shard_index}", i / dim)));
        }
        Ok(Self {
            data,
            dim,
            shard_index,
            seed,
            burn_in,
            acceptance_rate,
            warnings: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Values of component `j` across draws.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        stats::column_means(&self.data, self.dim)
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        stats::covariance(&self.data, self.dim)
    }

    /// Keeps only the first `t` draws.
    pub fn truncate(&mut self, t: usize) {
        self.data.truncate(t * self.dim);
    }

    /// Every draw translated by `shift`.
    pub fn shifted(&self, shift: &[f64]) -> Vec<f64> {
        let mut out = self.data.clone();
        for row in out.chunks_exact_mut(self.dim) {
            for (x, s) in row.iter_mut().zip(shift) {
                *x += s;
            }
        }
        out
    }
}

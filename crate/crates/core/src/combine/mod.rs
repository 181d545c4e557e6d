//! Combination of subposterior chains into one approximate posterior sample.

mod ar;
mod cmc;
mod diagnostics;
mod newton;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::ParameterVector;
use crate::stats;

pub use ar::{combine_ar, combine_ar_at};
pub use cmc::combine_cmc;
pub use diagnostics::{gaussian_kl, gaussian_kl_general, tv_bound_from_kl};
pub use newton::{refine_center_newton, NewtonTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "AR")]
    Ar,
    #[serde(rename = "AR+NR")]
    ArNewton,
    #[serde(rename = "CMC")]
    Cmc,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Ar => "AR",
            Method::ArNewton => "AR+NR",
            Method::Cmc => "CMC",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_uppercase().as_str() {
            "AR" => Ok(Method::Ar),
            "AR+NR" | "AR_NR" | "ARNR" => Ok(Method::ArNewton),
            "CMC" => Ok(Method::Cmc),
            other => Err(Error::Config(format!("unknown combiner '{other}'"))),
        }
    }
}

/// Pooled draws approximating the full posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedSample {
    draws: Vec<f64>,
    dim: usize,
    pub center: ParameterVector,
    pub method: Method,
    pub warnings: Vec<String>,
}

impl CombinedSample {
    pub(crate) fn new(draws: Vec<f64>, center: ParameterVector, method: Method) -> Self {
        let dim = center.dim();
        Self {
            draws,
            dim,
            center,
            method,
            warnings: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.draws.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.draws
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        stats::column_means(&self.draws, self.dim)
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        stats::covariance(&self.draws, self.dim)
    }
}

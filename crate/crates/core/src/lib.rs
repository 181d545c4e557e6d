//! Embarrassingly parallel MCMC by averaging recentred subposteriors.
//!
//! Data are split into `K` shards, each shard's likelihood is raised to the
//! power `K` and sampled independently, and the subposterior chains are
//! shifted to a common center and pooled.

pub mod combine;
pub mod data;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod models;
pub mod sampler;
pub mod shard;
pub mod stats;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};

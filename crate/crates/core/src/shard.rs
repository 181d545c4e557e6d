//! Partitioning data into `K` equal shards and running one subposterior chain
//! per shard in parallel.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{shard_target, DataShard, Dataset, Model, ParameterVector, Scaling};
use crate::sampler::{rwm_sample, ChainDraws, RwmConfig};

/// Seeded assignment of rows to shards: row `perm[i*M + j]` is row `j` of shard `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardPlan {
    k: usize,
    perm: Vec<usize>,
    master_seed: u64,
}

impl ShardPlan {
    pub fn new(n: usize, k: usize, master_seed: u64) -> Result<Self> {
        if k == 0 || n == 0 || n % k != 0 {
            return Err(Error::ShardSize { n, k });
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(master_seed));
        Ok(Self { k, perm, master_seed })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.perm.len() / self.k
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Source row indices of shard `i`.
    pub fn shard_rows(&self, i: usize) -> &[usize] {
        let m = self.m();
        &self.perm[i * m..(i + 1) * m]
    }

    pub fn apply<R: Clone>(&self, data: &Dataset<R>) -> Result<Vec<DataShard<R>>> {
        if data.n() != self.perm.len() {
            return Err(Error::DimensionMismatch {
                expected: self.perm.len(),
                got: data.n(),
            });
        }
        let rows = data.rows();
        (0..self.k)
            .map(|i| {
                let shard_rows = self.shard_rows(i).iter().map(|&r| rows[r].clone()).collect();
                DataShard::new(shard_rows, self.k, i)
            })
            .collect()
    }
}

/// Shuffles rows with a seeded permutation, then splits contiguously into `k`
/// shards of `N / k` rows each.
pub fn make_shards<R: Clone>(data: &Dataset<R>, k: usize, master_seed: u64) -> Result<Vec<DataShard<R>>> {
    ShardPlan::new(data.n(), k, master_seed)?.apply(data)
}

/// Chain seed for shard `index`: `master_seed + index`.
pub fn shard_seed(master_seed: u64, index: usize) -> u64 {
    master_seed.wrapping_add(index as u64)
}

/// Per-shard chains with their means and covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct SubposteriorResult {
    pub chains: Vec<ChainDraws>,
    pub shard_means: Vec<ParameterVector>,
    pub shard_covs: Vec<DMatrix<f64>>,
}

impl SubposteriorResult {
    pub fn from_chains(chains: Vec<ChainDraws>, names: Vec<String>) -> Result<Self> {
        let d = names.len();
        if chains.is_empty() {
            return Err(Error::Precondition("no chains".into()));
        }
        if let Some(c) = chains.iter().find(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: c.dim(),
            });
        }
        let shard_means = chains
            .iter()
            .map(|c| ParameterVector::new(c.mean(), names.clone()))
            .collect::<Result<Vec<_>>>()?;
        let shard_covs = chains.iter().map(ChainDraws::covariance).collect();
        Ok(Self {
            chains,
            shard_means,
            shard_covs,
        })
    }

    pub fn k(&self) -> usize {
        self.chains.len()
    }

    pub fn dim(&self) -> usize {
        self.chains[0].dim()
    }

    pub fn names(&self) -> &[String] {
        self.shard_means[0].names()
    }
}

/// Runs `sample(shard, seed)` for every shard on a pool of `workers` threads.
///
/// Results are gathered by shard index, so the output does not depend on
/// `workers`. Every shard is attempted; failures are reported together.
pub fn run_subposteriors<R, F>(
    shards: &[DataShard<R>],
    names: Vec<String>,
    master_seed: u64,
    workers: usize,
    sample: F,
) -> Result<SubposteriorResult>
where
    R: Send + Sync,
    F: Fn(&DataShard<R>, u64) -> Result<ChainDraws> + Send + Sync,
{
    if shards.is_empty() {
        return Err(Error::Precondition("no shards to run".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<ChainDraws>> = pool.install(|| {
        shards
            .par_iter()
            .map(|s| {
                let seed = shard_seed(master_seed, s.index());
                sample(s, seed).map(|mut c| {
                    c.shard_index = s.index();
                    c.seed = seed;
                    c
                })
            })
            .collect()
    });
    let mut chains = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (shard, outcome) in shards.iter().zip(outcomes) {
        match outcome {
            Ok(c) => chains.push(c),
            Err(e) => failures.push((shard.index(), e)),
        }
    }
    if !failures.is_empty() {
        return Err(Error::ShardFailures(failures));
    }
    SubposteriorResult::from_chains(chains, names)
}

/// Adaptive RWM on every shard's subposterior.
pub fn run_rwm_subposteriors<M: Model>(
    model: &M,
    shards: &[DataShard<M::Row>],
    config: &RwmConfig,
    scaling: Scaling,
    master_seed: u64,
    workers: usize,
) -> Result<SubposteriorResult> {
    run_subposteriors(shards, model.component_names(), master_seed, workers, |shard, seed| {
        let target = shard_target(model, shard, scaling);
        rwm_sample(target.as_ref(), config, seed)
    })
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::combine::Method;
use crate::data::{ExampleId, GeneratorSpec, TabularSource};
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_GRID_SIZE;
use crate::models::MixtureHyperParams;
use crate::sampler::LatentInit;

pub const SCHEMA_VERSION: u32 = 1;

/// One experiment: a dataset, a list of shard counts and the combiners to
/// evaluate at each. Stored as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub example: ExampleId,
    /// Number of observations `N`.
    pub n: usize,
    /// Shard counts; each must divide `n`.
    pub k: Vec<usize>,
    pub combiners: Vec<Method>,
    #[serde(default = "defaults::newton_iters")]
    pub newton_iters: usize,
    #[serde(default = "defaults::newton_tol")]
    pub newton_tol: f64,

    /// Data-generating parameters; empty for the example defaults.
    #[serde(default)]
    pub truth: Vec<f64>,
    #[serde(default = "defaults::data_seed")]
    pub data_seed: u64,
    /// Master seed for shard assignment and subposterior chains.
    #[serde(default = "defaults::chain_seed")]
    pub chain_seed: u64,
    #[serde(default = "defaults::reference_seed")]
    pub reference_seed: u64,

    /// Post-burn-in draws kept per subposterior.
    pub draws: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "defaults::one")]
    pub thin: usize,
    /// Post-burn-in draws of the full-data reference chain.
    #[serde(default = "defaults::reference_draws")]
    pub reference_draws: usize,
    #[serde(default)]
    pub reference_burn_in: usize,
    #[serde(default)]
    pub target_accept: Option<f64>,
    #[serde(default = "defaults::adapt_window")]
    pub adapt_window: usize,
    /// Start RWM chains at each target's mode with the inverse Hessian as
    /// initial proposal covariance.
    #[serde(default = "defaults::yes")]
    pub mode_start: bool,
    /// Explicit chain start; overrides `mode_start`.
    #[serde(default)]
    pub init: Option<Vec<f64>>,
    #[serde(default = "defaults::latent_init")]
    pub latent_init: LatentInit,

    #[serde(default = "defaults::prior_shape")]
    pub prior_a0: f64,
    #[serde(default = "defaults::prior_shape")]
    pub prior_b0: f64,
    #[serde(default)]
    pub mixture_prior: Option<MixtureHyperParams>,

    /// Real data for the logistic example.
    #[serde(default)]
    pub csv: Option<TabularSource>,
    #[serde(default)]
    pub n_features: Option<usize>,

    #[serde(default = "defaults::grid_size")]
    pub grid_size: usize,
    /// Worker threads for the shard runner; all cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "defaults::yes")]
    pub emit_densities: bool,
}

mod defaults {
    use super::*;

    pub fn newton_iters() -> usize {
        5
    }
    pub fn newton_tol() -> f64 {
        1e-8
    }
    pub fn data_seed() -> u64 {
        1
    }
    pub fn chain_seed() -> u64 {
        1000
    }
    pub fn reference_seed() -> u64 {
        7
    }
    pub fn one() -> usize {
        1
    }
    pub fn reference_draws() -> usize {
        200_000
    }
    pub fn adapt_window() -> usize {
        100
    }
    pub fn yes() -> bool {
        true
    }
    pub fn latent_init() -> LatentInit {
        LatentInit::Zero
    }
    pub fn prior_shape() -> f64 {
        0.01
    }
    pub fn grid_size() -> usize {
        DEFAULT_GRID_SIZE
    }
    pub fn output_dir() -> PathBuf {
        PathBuf::from("results")
    }
}

impl ExperimentConfig {
    /// A config with defaults for everything but the essentials.
    pub fn new(example: ExampleId, n: usize, k: Vec<usize>, combiners: Vec<Method>, draws: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: None,
            example,
            n,
            k,
            combiners,
            newton_iters: defaults::newton_iters(),
            newton_tol: defaults::newton_tol(),
            truth: Vec::new(),
            data_seed: defaults::data_seed(),
            chain_seed: defaults::chain_seed(),
            reference_seed: defaults::reference_seed(),
            draws,
            burn_in: 0,
            thin: 1,
            reference_draws: defaults::reference_draws(),
            reference_burn_in: 0,
            target_accept: None,
            adapt_window: defaults::adapt_window(),
            mode_start: true,
            init: None,
            latent_init: defaults::latent_init(),
            prior_a0: defaults::prior_shape(),
            prior_b0: defaults::prior_shape(),
            mixture_prior: None,
            csv: None,
            n_features: None,
            grid_size: defaults::grid_size(),
            workers: None,
            output_dir: defaults::output_dir(),
            emit_densities: true,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.example.name().to_string())
    }

    pub fn generator(&self) -> GeneratorSpec {
        GeneratorSpec {
            example: self.example,
            n: self.n,
            seed: self.data_seed,
            truth: self.truth.clone(),
        }
    }

    pub fn hyper(&self) -> MixtureHyperParams {
        self.mixture_prior.unwrap_or_default()
    }

    pub fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.n == 0 {
            return fail("n must be positive".into());
        }
        if self.k.is_empty() {
            return fail("k list is empty".into());
        }
        if let Some(k) = self.k.iter().find(|&&k| k == 0 || self.n % k != 0) {
            return fail(format!("k = {k} does not divide n = {}", self.n));
        }
        if self.combiners.is_empty() {
            return fail("combiner list is empty".into());
        }
        if self.draws == 0 || self.reference_draws == 0 {
            return fail("draws and reference_draws must be positive".into());
        }
        if self.thin == 0 {
            return fail("thin must be >= 1".into());
        }
        if self.adapt_window == 0 {
            return fail("adapt_window must be >= 1".into());
        }
        if let Some(a) = self.target_accept {
            if !(a > 0.0 && a < 1.0) {
                return fail(format!("target_accept {a} not in (0, 1)"));
            }
        }
        if self.grid_size < 2 {
            return fail("grid_size must be >= 2".into());
        }
        if self.workers == Some(0) {
            return fail("workers must be >= 1".into());
        }
        if !(self.prior_a0 > 0.0 && self.prior_b0 > 0.0) {
            return fail("Beta prior shapes must be positive".into());
        }
        if self.example == ExampleId::Mixture && self.combiners.contains(&Method::ArNewton) {
            return fail("AR+NR needs an analytic Hessian, which the mixture model does not provide".into());
        }
        if self.csv.is_some() {
            if self.example != ExampleId::Logistic {
                return fail("csv data is only supported for the logistic example".into());
            }
            if self.n_features.is_none() {
                return fail("csv data needs n_features".into());
            }
        } else {
            self.generator().validate()?;
        }
        if let Some(h) = &self.mixture_prior {
            h.validate()?;
        }
        Ok(())
    }
}

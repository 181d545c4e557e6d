//! Adaptive random-walk Metropolis.
//!
//! The proposal is `N(theta, c^2 Sigma)`. During burn-in `log c` follows a
//! Robbins-Monro recursion toward the target acceptance rate and `Sigma` is
//! re-estimated from the draws of doubling adaptation windows. After burn-in
//! both are frozen, so the recorded chain is a time-homogeneous Metropolis
//! chain.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LogDensity;
use crate::sampler::ChainDraws;

/// Consecutive rejections after which a chain is declared stuck.
pub const STUCK_WINDOW: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwmConfig {
    pub total_iters: usize,
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thin: usize,
    pub init: Vec<f64>,
    /// Defaults to 0.44 in one dimension and 0.234 otherwise.
    #[serde(default)]
    pub target_accept: Option<f64>,
    #[serde(default = "default_window")]
    pub adapt_window: usize,
    /// Standard deviation of the initial diagonal proposal.
    #[serde(default = "default_scale")]
    pub init_scale: f64,
    /// Initial proposal covariance; overrides `init_scale` when set.
    #[serde(skip)]
    pub init_cov: Option<DMatrix<f64>>,
}

fn one() -> usize {
    1
}

fn default_window() -> usize {
    100
}

fn default_scale() -> f64 {
    0.1
}

impl RwmConfig {
    pub fn new(total_iters: usize, burn_in: usize, init: Vec<f64>) -> Self {
        Self {
            total_iters,
            burn_in,
            thin: 1,
            init,
            target_accept: None,
            adapt_window: default_window(),
            init_scale: default_scale(),
            init_cov: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.total_iters {
            return Err(Error::Config(format!(
                "burn_in ({}) must be smaller than total_iters ({})",
                self.burn_in, self.total_iters
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be >= 1".into()));
        }
        if self.adapt_window == 0 {
            return Err(Error::Config("adapt_window must be >= 1".into()));
        }
        if let Some(a) = self.target_accept {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Config(format!("target_accept {a} not in (0, 1)")));
            }
        }
        if !(self.init_scale > 0.0) {
            return Err(Error::Config("init_scale must be positive".into()));
        }
        Ok(())
    }

    pub fn target_accept_for(&self, d: usize) -> f64 {
        self.target_accept
            .unwrap_or(if d == 1 { 0.44 } else { 0.234 })
    }
}

/// Frozen proposal parameters: scale and Cholesky factor of `Sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub log_scale: f64,
    pub chol: DMatrix<f64>,
}

/// Welford accumulator for a window of draws.
struct WindowMoments {
    n: usize,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
}

impl WindowMoments {
    fn new(d: usize) -> Self {
        Self {
            n: 0,
            mean: DVector::zeros(d),
            m2: DMatrix::zeros(d, d),
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let x = DVector::from_column_slice(x);
        let delta = &x - &self.mean;
        self.mean += &delta / self.n as f64;
        let delta2 = &x - &self.mean;
        self.m2 += &delta * delta2.transpose();
    }

    fn covariance(&self) -> Option<DMatrix<f64>> {
        if self.n < 2 {
            return None;
        }
        let c = &self.m2 / (self.n as f64 - 1.0);
        Some((&c + c.transpose()) * 0.5)
    }
}

fn cholesky_with_jitter(cov: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let d = cov.nrows();
    let scale = (0..d).map(|i| cov[(i, i)]).fold(0.0f64, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    let mut jitter = 1e-10 * scale;
    for _ in 0..6 {
        let m = cov + DMatrix::identity(d, d) * jitter;
        if let Some(ch) = m.cholesky() {
            return Some(ch.l());
        }
        jitter *= 100.0;
    }
    None
}

/// Stepwise adaptive RWM sampler over a borrowed target.
pub struct AdaptiveRwm<'a> {
    target: &'a dyn LogDensity,
    rng: ChaCha8Rng,
    state: Vec<f64>,
    log_density: f64,
    kernel: Kernel,
    target_accept: f64,
    burn_in: usize,
    iteration: usize,
    window: WindowMoments,
    window_len: usize,
    window_end: usize,
    rejections: usize,
    proposal: Vec<f64>,
    noise: DVector<f64>,
}

impl<'a> AdaptiveRwm<'a> {
    pub fn new(target: &'a dyn LogDensity, config: &RwmConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let d = target.dim();
        if config.init.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: config.init.len(),
            });
        }
        let log_density = target.log_density(&config.init);
        if !log_density.is_finite() {
            return Err(Error::Initialization);
        }
        let cov = match &config.init_cov {
            Some(c) if c.nrows() == d && c.ncols() == d => c.clone(),
            Some(c) => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: c.nrows(),
                })
            }
            None => DMatrix::identity(d, d) * config.init_scale.powi(2),
        };
        let chol = cholesky_with_jitter(&cov).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self {
            target,
            rng: ChaCha8Rng::seed_from_u64(seed),
            state: config.init.clone(),
            log_density,
            kernel: Kernel {
                log_scale: (2.38 / (d as f64).sqrt()).ln(),
                chol,
            },
            target_accept: config.target_accept_for(d),
            burn_in: config.burn_in,
            iteration: 0,
            window: WindowMoments::new(d),
            window_len: config.adapt_window,
            window_end: config.adapt_window,
            rejections: 0,
            proposal: vec![0.0; d],
            noise: DVector::zeros(d),
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// One Metropolis step; returns whether the proposal was accepted.
    pub fn step(&mut self) -> Result<bool> {
        let d = self.state.len();
        for z in self.noise.iter_mut() {
            *z = self.rng.sample(StandardNormal);
        }
        let step = &self.kernel.chol * &self.noise * self.kernel.log_scale.exp();
        for i in 0..d {
            self.proposal[i] = self.state[i] + step[i];
        }
        let lp = self.target.log_density(&self.proposal);
        let log_ratio = if lp.is_nan() { f64::NEG_INFINITY } else { lp - self.log_density };
        let u: f64 = self.rng.gen();
        let accepted = u.ln() < log_ratio;
        if accepted {
            self.state.copy_from_slice(&self.proposal);
            self.log_density = lp;
            self.rejections = 0;
        } else {
            self.rejections += 1;
            if self.rejections >= STUCK_WINDOW {
                return Err(Error::StuckChain {
                    window: STUCK_WINDOW,
                    iteration: self.iteration,
                });
            }
        }

        if self.iteration < self.burn_in {
            self.adapt(log_ratio.min(0.0).exp());
        }
        self.iteration += 1;
        Ok(accepted)
    }

    fn adapt(&mut self, accept_prob: f64) {
        let gain = (self.iteration as f64 + 1.0).powf(-0.6);
        self.kernel.log_scale += gain * (accept_prob - self.target_accept);
        self.window.push(&self.state);
        if self.iteration + 1 == self.window_end {
            let d = self.state.len();
            if let Some(chol) = self.window.covariance().and_then(|c| cholesky_with_jitter(&c)) {
                self.kernel.chol = chol;
                self.kernel.log_scale = (2.38 / (d as f64).sqrt()).ln();
            }
            self.window = WindowMoments::new(d);
            self.window_len *= 2;
            self.window_end += self.window_len;
        }
    }
}

/// Runs adaptive RWM and returns the thinned post-burn-in draws.
pub fn rwm_sample(target: &dyn LogDensity, config: &RwmConfig, seed: u64) -> Result<ChainDraws> {
    let mut sampler = AdaptiveRwm::new(target, config, seed)?;
    let d = target.dim();
    let kept = (config.total_iters - config.burn_in).div_ceil(config.thin);
    let mut draws = Vec::with_capacity(kept * d);
    let mut accepted = 0usize;
    for it in 0..config.total_iters {
        let acc = sampler.step()?;
        if it >= config.burn_in {
            accepted += usize::from(acc);
            if (it - config.burn_in) % config.thin == 0 {
                draws.extend_from_slice(sampler.state());
            }
        }
    }
    let rate = accepted as f64 / (config.total_iters - config.burn_in) as f64;
    ChainDraws::new(draws, d, 0, seed, config.burn_in, rate)
}

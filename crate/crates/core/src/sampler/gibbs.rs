use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DataShard, Scaling};
use crate::models::{MixtureHyperParams, MixtureParams, MixtureRow, MixtureState, MixtureTarget};
use crate::sampler::ChainDraws;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GibbsStep {
    Latents,
    Alpha,
    Beta,
    Sigma2,
    Psi2,
    P,
}

impl GibbsStep {
    pub const DEFAULT_ORDER: [GibbsStep; 6] = [
        GibbsStep::Latents,
        GibbsStep::Alpha,
        GibbsStep::Beta,
        GibbsStep::Sigma2,
        GibbsStep::Psi2,
        GibbsStep::P,
    ];
}

/// Initial latent counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentInit {
    /// Every copy in the regression component.
    Zero,
    /// Every copy in the noise component.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub total_iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub init: MixtureParams,
    pub latent_init: LatentInit,
    pub order: Vec<GibbsStep>,
    pub scaling: Scaling,
}

impl GibbsConfig {
    pub fn new(total_iters: usize, burn_in: usize, init: MixtureParams) -> Self {
        Self {
            total_iters,
            burn_in,
            thin: 1,
            init,
            latent_init: LatentInit::Zero,
            order: GibbsStep::DEFAULT_ORDER.to_vec(),
            scaling: Scaling::Rescaled,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.total_iters {
            return Err(Error::Config("burn_in must be smaller than total_iters".into()));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be >= 1".into()));
        }
        let mut seen = self.order.clone();
        seen.sort_by_key(|s| *s as u8);
        seen.dedup();
        if seen.len() != 6 || self.order.len() != 6 {
            return Err(Error::Config(
                "Gibbs order must list each of the six updates exactly once".into(),
            ));
        }
        self.init.validate()
    }
}

const MAX_WARNINGS: usize = 16;

/// Gibbs sampler for the mixture model on one shard. Records only the five
/// continuous parameters; latent counts are never stored.
pub fn gibbs_sample_mixture(
    shard: &DataShard<MixtureRow>,
    hyper: &MixtureHyperParams,
    config: &GibbsConfig,
    seed: u64,
) -> Result<ChainDraws> {
    config.validate()?;
    let k = shard.replication() as u32;
    let (replication, prior_power) = match config.scaling {
        Scaling::Rescaled => (k, 1.0),
        Scaling::TemperedPrior => (1, 1.0 / f64::from(k)),
    };
    let target = MixtureTarget::new(shard.rows(), replication, prior_power, hyper)?;
    let z0 = match config.latent_init {
        LatentInit::Zero => 0,
        LatentInit::Full => replication,
    };
    let mut state = MixtureState::new(config.init, vec![z0; shard.m()], replication)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut warnings: Vec<String> = Vec::new();
    let mut note = |msg: String, it: usize| {
        if warnings.len() < MAX_WARNINGS {
            warn!("shard {} iteration {it}: {msg}", shard.index());
            warnings.push(format!("iteration {it}: {msg}"));
        }
    };

    let kept = (config.total_iters - config.burn_in).div_ceil(config.thin);
    let mut draws = Vec::with_capacity(kept * 5);
    for it in 0..config.total_iters {
        for step in &config.order {
            match step {
                GibbsStep::Latents => target.sample_latents(&mut state, &mut rng),
                GibbsStep::Alpha => {
                    if target.regression_count(&state) == 0 {
                        note("no weight on regression component; alpha drawn from prior".into(), it);
                    }
                    state.params.alpha = target.alpha(&state).sample(&mut rng);
                }
                GibbsStep::Beta => state.params.beta = target.beta(&state).sample(&mut rng),
                GibbsStep::Sigma2 => match target.sigma2(&state).sample(&mut rng) {
                    Ok(v) => state.params.sigma2 = v,
                    Err(e) => note(format!("sigma2 kept: {e}"), it),
                },
                GibbsStep::Psi2 => match target.psi2(&state).sample(&mut rng) {
                    Ok(v) => state.params.psi2 = v,
                    Err(e) => note(format!("psi2 kept: {e}"), it),
                },
                GibbsStep::P => match target.p(&state).sample(&mut rng) {
                    // Beta draws can round to the boundary for extreme counts.
                    Ok(v) if v > 0.0 && v < 1.0 => state.params.p = v,
                    Ok(v) => note(format!("p draw {v} on boundary, kept"), it),
                    Err(e) => note(format!("p kept: {e}"), it),
                },
            }
        }
        if it >= config.burn_in && (it - config.burn_in) % config.thin == 0 {
            draws.extend_from_slice(&state.params.to_array());
        }
    }
    let mut chain = ChainDraws::new(draws, 5, shard.index(), seed, config.burn_in, 1.0)?;
    chain.warnings = warnings;
    Ok(chain)
}

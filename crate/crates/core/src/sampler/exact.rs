use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::models::BetaPosterior;
use crate::sampler::ChainDraws;

/// `t` independent draws from an exact Beta (sub)posterior.
pub fn exact_beta_sample(post: &BetaPosterior, t: usize, seed: u64) -> Result<ChainDraws> {
    if t == 0 {
        return Err(Error::Precondition("need at least one draw".into()));
    }
    let dist = Beta::new(post.a, post.b).map_err(|e| Error::Precondition(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..t).map(|_| dist.sample(&mut rng)).collect();
    ChainDraws::new(draws, 1, 0, seed, 0, 1.0)
}

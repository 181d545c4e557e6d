//! MCMC engines: adaptive random-walk Metropolis, the mixture Gibbs sampler
//! and direct sampling from exact Beta posteriors.

mod chain;
mod exact;
mod gibbs;
mod mode;
mod rwm;

pub use chain::ChainDraws;
pub use exact::exact_beta_sample;
pub use gibbs::{gibbs_sample_mixture, GibbsConfig, GibbsStep, LatentInit};
pub use mode::{find_mode, ModeFit};
pub use rwm::{rwm_sample, AdaptiveRwm, Kernel, RwmConfig, STUCK_WINDOW};

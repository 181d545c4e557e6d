//! Concrete models for the four reference experiments.

mod bernoulli;
mod gaussian;
mod logistic;
pub mod mixture;

pub use bernoulli::{BernoulliModel, BetaBernoulli, BetaPosterior};
pub use gaussian::GaussianModel;
pub use logistic::{log_sigmoid, sigmoid, LogisticModel, LogisticRow};
pub use mixture::{
    mixture_gibbs_conditionals, FullConditionals, MixtureHyperParams, MixtureModel, MixtureParams,
    MixtureRow, MixtureState, MixtureTarget,
};

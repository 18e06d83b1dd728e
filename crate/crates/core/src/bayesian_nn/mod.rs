//! Bayesian feed-forward networks: stochastic forward passes via the
//! reparameterization trick, Monte-Carlo uncertainty estimates, and exact
//! analytic gradients for the losses used by the consensus optimizer.

mod loss;
mod model;
mod noise;
mod params;

pub use loss::{bce_loss, BceRecorder, Example, PROB_CLAMP};
pub use model::{
    sigmoid, softplus, softplus_inverse, Activation, BayesianLinear, BnnModel, DeterministicLinear,
    ForwardTrace, InputScaler, Layer, OutputTransform,
};
pub use noise::NoiseSource;
pub use params::ParamVector;

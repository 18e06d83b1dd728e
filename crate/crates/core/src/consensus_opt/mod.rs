//! Consensus optimization: per-round dual/target updates plus the local
//! dual-augmented training loop with separate mu and rho optimizers.

mod adam;
mod local;
mod node_update;
mod regularizer;

pub use adam::{AdamConfig, AdamOptimizer};
pub use local::{
    local_optimize, BnnObjective, LocalOptimizer, LocalRunStats, MinibatchPolicy, PredEval,
    PredictionObjective, QuadraticObjective, ZeroObjective,
};
pub use node_update::{node_update, ConsensusTargets, DualState, NodeId, PenaltyWeights};
pub use regularizer::{kl_rho_gradient, kl_rho_regularizer, l2_mu_gradient, l2_mu_regularizer};

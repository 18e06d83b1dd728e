//! Decentralized multi-agent learning testbed.
//!
//! Agents train Bayesian neural networks on local LiDAR-style occupancy data
//! and reach agreement through a peer-to-peer consensus optimizer driven by a
//! round-synchronized state-exchange protocol. A kernel-density baseline over
//! the observed data provides the reference against which the per-point
//! uncertainty of the trained networks is validated.
//!
//! Modules:
//! - [`bayesian_nn`] — Bayesian MLP with exact analytic gradients.
//! - [`consensus_opt`] — dual-augmented local optimization and the consensus
//!   node update.
//! - [`peer_protocol`] — round-synchronized asynchronous state exchange over
//!   simulated or UDP transports.
//! - [`lidar_scenario`] — synthetic environments, trajectories, ray-cast
//!   scans, and labeled datasets.
//! - [`kde_uncertainty`] — multivariate Gaussian kernel density estimation.
//! - [`experiment`] — end-to-end orchestration, evaluation grids, reports.

pub mod bayesian_nn;
pub mod config;
pub mod consensus_opt;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod kde_uncertainty;
pub mod lidar_scenario;
pub mod peer_protocol;

pub use error::{Error, Result};

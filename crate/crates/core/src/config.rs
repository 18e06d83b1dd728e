//! Experiment configuration: one JSON document drives scenario generation,
//! training, the protocol, and evaluation. Every random stream is seeded
//! explicitly; the whole document is echoed into the run's report.

use std::path::Path;

use crate::bayesian_nn::{Activation, OutputTransform};
use crate::error::{Error, Result};
use crate::lidar_scenario::{EnvSpec, TrajectorySpec};
use crate::peer_protocol::SimConfig;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Mixed into every derived seed; the CLI's `--seed` overrides it.
    pub master_seed: u64,
    pub scenario: ScenarioConfig,
    pub model: ModelConfig,
    pub optimizer: OptimizerConfig,
    pub protocol: ProtocolConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 7,
            scenario: ScenarioConfig::default(),
            model: ModelConfig::default(),
            optimizer: OptimizerConfig::default(),
            protocol: ProtocolConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub env: EnvSpec,
    pub agents: usize,
    pub trajectory: TrajectorySpec,
    pub beams: usize,
    pub max_range: f64,
    pub free_per_beam: usize,
    pub data_seed: u64,
    /// Fraction of each agent's points held out for accuracy evaluation.
    pub holdout_fraction: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            env: EnvSpec::default(),
            agents: 4,
            trajectory: TrajectorySpec::default(),
            beams: 64,
            max_range: 5.0,
            free_per_beam: 3,
            data_seed: 101,
            holdout_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Input..output layer widths.
    pub layer_sizes: Vec<usize>,
    /// One activation per hidden transition.
    pub hidden_activations: Vec<Activation>,
    pub output_transform: OutputTransform,
    pub rho_init: f64,
    /// Weight scale of the first layer; with normalized inputs this sets the
    /// spatial frequency of the sine features.
    pub first_layer_scale: f64,
    /// Map environment bounds to [-1, 1]^2 before the first layer.
    pub normalize_inputs: bool,
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            layer_sizes: vec![2, 64, 64, 64, 1],
            hidden_activations: vec![Activation::Sine, Activation::Tanh, Activation::Tanh],
            output_transform: OutputTransform::Sigmoid,
            rho_init: -5.0,
            first_layer_scale: 12.0,
            normalize_inputs: true,
            init_seed: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub lr_mu: f64,
    pub lr_rho: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub w_mu: f64,
    pub w_rho: f64,
    pub growth: f64,
    pub iters_per_round: usize,
    /// Full-batch threshold and minibatch size of the local optimizer.
    pub full_batch_limit: usize,
    pub minibatch: usize,
    /// Let the prediction loss reach the rho parameters (off by default:
    /// spreads learn only through consensus and regularization).
    pub rho_uses_pred_loss: bool,
    pub noise_seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            lr_mu: 1e-3,
            lr_rho: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            w_mu: 0.5,
            w_rho: 0.5,
            growth: 1.0,
            iters_per_round: 40,
            full_batch_limit: 1024,
            minibatch: 512,
            rho_uses_pred_loss: false,
            noise_seed: 23,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Full,
    Ring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    Simulated,
    Udp,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub topology: Topology,
    pub max_round: u32,
    pub transport: TransportKind,
    pub sim: SimConfig,
    pub udp: UdpConfig,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            topology: Topology::Full,
            max_round: 30,
            transport: TransportKind::Simulated,
            sim: SimConfig::default(),
            udp: UdpConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct UdpConfig {
    /// Node `i` binds 127.0.0.1:(base_port + i).
    pub base_port: u16,
    pub recv_timeout_secs: u64,
}

impl Default for UdpConfig {
    fn default() -> Self {
        UdpConfig {
            base_port: 47310,
            recv_timeout_secs: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    pub resolution: [usize; 2],
    pub mc_passes: usize,
    pub eval_seed: u64,
    /// A cell belongs to a density grid's support when its value reaches
    /// this fraction of the grid maximum.
    pub density_support_threshold: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            resolution: [128, 128],
            mc_passes: 32,
            eval_seed: 99,
            density_support_threshold: 0.02,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(json).map_err(|e| Error::Config(format!("parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenario.agents == 0 {
            return Err(Error::Config("scenario.agents must be >= 1".into()));
        }
        if self.scenario.beams == 0 {
            return Err(Error::Config("scenario.beams must be >= 1".into()));
        }
        if !(self.scenario.max_range > 0.0) {
            return Err(Error::Config("scenario.max_range must be positive".into()));
        }
        if !(0.0..=0.5).contains(&self.scenario.holdout_fraction) {
            return Err(Error::Config(
                "scenario.holdout_fraction must be in [0, 0.5]".into(),
            ));
        }
        if self.model.layer_sizes.len() < 2 {
            return Err(Error::Config("model.layer_sizes needs input and output".into()));
        }
        if self.model.layer_sizes.first() != Some(&2) || self.model.layer_sizes.last() != Some(&1)
        {
            return Err(Error::Config(
                "occupancy models map 2 inputs to 1 output".into(),
            ));
        }
        if self.model.hidden_activations.len() + 2 != self.model.layer_sizes.len() {
            return Err(Error::Config(
                "model.hidden_activations must cover every hidden transition".into(),
            ));
        }
        if self.optimizer.iters_per_round == 0 {
            return Err(Error::Config("optimizer.iters_per_round must be >= 1".into()));
        }
        if !(self.optimizer.growth >= 1.0) {
            return Err(Error::Config("optimizer.growth must be >= 1".into()));
        }
        if self.evaluation.mc_passes < 2 {
            return Err(Error::Config(
                "evaluation.mc_passes must be >= 2 for std estimates".into(),
            ));
        }
        if self.evaluation.resolution.iter().any(|&r| r < 2) {
            return Err(Error::Config("evaluation.resolution needs >= 2 per axis".into()));
        }
        Ok(())
    }
}

/// Stable seed mixing (splitmix64 finalizer over the combined words); keeps
/// every random stream distinct yet fully determined by the config.
pub fn mix_seed(master: u64, component: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_mul(0x9E3779B97F4A7C15)
        .wrapping_add(component)
        .wrapping_mul(0xBF58476D1CE4E5B9)
        .wrapping_add(index)
        .wrapping_add(0x94D049BB133111EB);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

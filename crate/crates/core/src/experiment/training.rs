//! Node assembly and training drivers.
//!
//! Every agent owns a model, a pair of Adam optimizers, dual variables, and
//! penalty weights. The per-round update invoked by the protocol performs
//! the consensus step over the received peer states and then the local
//! dual-augmented optimization. A single agent skips the protocol entirely
//! and just minimizes its prediction loss with the same iteration budget.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::bayesian_nn::{BnnModel, Example, InputScaler, NoiseSource, ParamVector};
use crate::config::{mix_seed, ExperimentConfig, Topology, TransportKind};
use crate::consensus_opt::{
    local_optimize, node_update, AdamConfig, ConsensusTargets, DualState, LocalOptimizer,
    MinibatchPolicy, PenaltyWeights,
};
use crate::error::{Error, Result};
use crate::experiment::scenario::Scenario;
use crate::peer_protocol::{
    run_node, NodeHandle, NodeId, NodeRuntime, SimConfig, SimNet, UdpTransport,
};

const SEED_INIT: u64 = 4;
const SEED_NOISE: u64 = 5;
const SEED_BATCH: u64 = 6;
const SEED_SIM: u64 = 7;

#[derive(Debug, Clone)]
pub struct NodeOutcome {
    pub node_id: NodeId,
    pub params: ParamVector,
    pub rounds_run: u32,
    /// Final prediction loss of each round's local optimization.
    pub round_pred_losses: Vec<f64>,
}

impl NodeOutcome {
    pub fn final_pred_loss(&self) -> Option<f64> {
        self.round_pred_losses.last().copied()
    }
}

/// Build the configured model for one node.
pub fn build_node_model(config: &ExperimentConfig, scenario: &Scenario, node: NodeId) -> Result<BnnModel> {
    let mc = &config.model;
    let model = BnnModel::bayesian_mlp(
        &mc.layer_sizes,
        &mc.hidden_activations,
        mc.output_transform,
        mc.rho_init,
        mc.first_layer_scale,
        mix_seed(config.master_seed, SEED_INIT, mc.init_seed.wrapping_add(node as u64)),
    )?;
    Ok(if mc.normalize_inputs {
        let b = &scenario.env.bounds;
        model.with_input_scaler(InputScaler::for_bounds(
            &[b.min.x, b.min.y],
            &[b.max.x, b.max.y],
        ))
    } else {
        model
    })
}

struct NodeTrainer {
    node_id: NodeId,
    model: BnnModel,
    optimizer: LocalOptimizer,
    duals: DualState,
    weights: PenaltyWeights,
    train: Vec<Example>,
    config: ExperimentConfig,
    round_pred_losses: Vec<f64>,
}

impl NodeTrainer {
    fn new(config: &ExperimentConfig, scenario: &Scenario, node: NodeId) -> Result<Self> {
        let model = build_node_model(config, scenario, node)?;
        let params = model.extract_params();
        let oc = &config.optimizer;
        let optimizer = LocalOptimizer::new(
            params.mu.len(),
            params.rho.len(),
            AdamConfig {
                step_size: oc.lr_mu,
                beta1: oc.beta1,
                beta2: oc.beta2,
                epsilon: oc.epsilon,
            },
            AdamConfig {
                step_size: oc.lr_rho,
                beta1: oc.beta1,
                beta2: oc.beta2,
                epsilon: oc.epsilon,
            },
            oc.rho_uses_pred_loss,
        )?;
        Ok(NodeTrainer {
            node_id: node,
            model,
            optimizer,
            duals: DualState::zeros_for(&params),
            weights: PenaltyWeights::new(oc.w_mu, oc.w_rho, oc.growth)?,
            train: scenario.agents[node as usize].train.clone(),
            config: config.clone(),
            round_pred_losses: Vec::new(),
        })
    }

    fn policy(&self) -> MinibatchPolicy {
        MinibatchPolicy {
            full_batch_limit: self.config.optimizer.full_batch_limit,
            minibatch: self.config.optimizer.minibatch,
        }
    }

    fn stream_index(&self, round: u32) -> u64 {
        ((self.node_id as u64) << 32) | round as u64
    }

    /// One consensus round: dual/target update over the peer states, then the
    /// local optimization.
    fn consensus_round(
        &mut self,
        round: u32,
        own: &ParamVector,
        peers: &[(NodeId, ParamVector)],
    ) -> Result<ParamVector> {
        let peer_map: BTreeMap<NodeId, ParamVector> = peers.iter().cloned().collect();
        let (targets, new_duals) = node_update(own, &peer_map, &self.duals, &self.weights)?;
        self.duals = new_duals;
        self.model.load_params(own)?;
        let stream = self.config.optimizer.noise_seed ^ self.stream_index(round);
        let noise = NoiseSource::seeded(mix_seed(self.config.master_seed, SEED_NOISE, stream));
        let batch_seed = mix_seed(self.config.master_seed, SEED_BATCH, stream);
        let policy = self.policy();
        let stats = local_optimize(
            &mut self.model,
            &self.train,
            &self.duals,
            &targets,
            &self.weights,
            self.config.optimizer.iters_per_round,
            &mut self.optimizer,
            noise,
            batch_seed,
            policy,
        )?;
        self.round_pred_losses
            .push(stats.pred_losses.last().copied().unwrap_or(f64::NAN));
        self.weights.grow();
        Ok(self.model.extract_params())
    }

    /// One centralized round: plain prediction-loss descent (no peers, no
    /// penalties), keeping the per-round iteration budget.
    fn centralized_round(&mut self, round: u32) -> Result<()> {
        let params = self.model.extract_params();
        let duals = DualState::zeros_for(&params);
        let targets = ConsensusTargets::from_own(&params);
        let weights = PenaltyWeights::new(0.0, 0.0, 1.0)?;
        let stream = self.config.optimizer.noise_seed ^ self.stream_index(round);
        let noise = NoiseSource::seeded(mix_seed(self.config.master_seed, SEED_NOISE, stream));
        let batch_seed = mix_seed(self.config.master_seed, SEED_BATCH, stream);
        let policy = self.policy();
        let stats = local_optimize(
            &mut self.model,
            &self.train,
            &duals,
            &targets,
            &weights,
            self.config.optimizer.iters_per_round,
            &mut self.optimizer,
            noise,
            batch_seed,
            policy,
        )?;
        self.round_pred_losses
            .push(stats.pred_losses.last().copied().unwrap_or(f64::NAN));
        Ok(())
    }
}

fn neighbor_sets(topology: Topology, n: usize) -> Vec<Vec<NodeId>> {
    (0..n as NodeId)
        .map(|id| match topology {
            Topology::Full => (0..n as NodeId).filter(|&j| j != id).collect(),
            Topology::Ring => {
                if n == 2 {
                    vec![1 - id]
                } else {
                    let prev = (id + n as NodeId - 1) % n as NodeId;
                    let next = (id + 1) % n as NodeId;
                    vec![prev.min(next), prev.max(next)]
                }
            }
        })
        .collect()
}

/// Train all agents and return their outcomes in node order.
pub fn train_nodes(config: &ExperimentConfig, scenario: &Scenario) -> Result<Vec<NodeOutcome>> {
    let n = scenario.agents.len();
    if n == 1 {
        let mut trainer = NodeTrainer::new(config, scenario, 0)?;
        for round in 0..config.protocol.max_round {
            trainer.centralized_round(round)?;
        }
        return Ok(vec![NodeOutcome {
            node_id: 0,
            params: trainer.model.extract_params(),
            rounds_run: config.protocol.max_round,
            round_pred_losses: trainer.round_pred_losses,
        }]);
    }
    match config.protocol.transport {
        TransportKind::Simulated => train_simulated(config, scenario),
        TransportKind::Udp => train_udp(config, scenario),
    }
}

fn train_simulated(config: &ExperimentConfig, scenario: &Scenario) -> Result<Vec<NodeOutcome>> {
    let n = scenario.agents.len();
    let neighbors = neighbor_sets(config.protocol.topology, n);
    let sim_config = SimConfig {
        seed: mix_seed(config.master_seed, SEED_SIM, config.protocol.sim.seed),
        ..config.protocol.sim
    };
    let mut net = SimNet::new(sim_config)?;
    let losses: Vec<Arc<Mutex<Vec<f64>>>> =
        (0..n).map(|_| Arc::new(Mutex::new(Vec::new()))).collect();
    for id in 0..n as NodeId {
        let mut trainer = NodeTrainer::new(config, scenario, id)?;
        let initial = trainer.model.extract_params();
        let runtime = NodeRuntime::new(
            id,
            neighbors[id as usize].iter().copied(),
            config.protocol.max_round,
            initial,
        )?;
        let sink = Arc::clone(&losses[id as usize]);
        let callback = Box::new(
            move |round: u32, own: &ParamVector, peers: &[(NodeId, ParamVector)]| {
                let new_state = trainer.consensus_round(round, own, peers)?;
                sink.lock().unwrap().clone_from(&trainer.round_pred_losses);
                Ok(new_state)
            },
        );
        net.add_node(NodeHandle::new(runtime, callback))?;
    }
    let report = net.run()?;
    let states = net.into_states();
    Ok(states
        .into_iter()
        .map(|(id, params)| NodeOutcome {
            node_id: id,
            params,
            rounds_run: report.final_rounds[&id],
            round_pred_losses: losses[id as usize].lock().unwrap().clone(),
        })
        .collect())
}

fn train_udp(config: &ExperimentConfig, scenario: &Scenario) -> Result<Vec<NodeOutcome>> {
    let n = scenario.agents.len();
    let neighbors = neighbor_sets(config.protocol.topology, n);
    let base = config.protocol.udp.base_port;
    let timeout = Duration::from_secs(config.protocol.udp.recv_timeout_secs);
    let addr_of = |id: NodeId| SocketAddr::from(([127, 0, 0, 1], base + id as u16));

    // Bind every socket before any node starts broadcasting.
    let mut transports = Vec::with_capacity(n);
    for id in 0..n as NodeId {
        let peer_addrs = neighbors[id as usize].iter().map(|&p| addr_of(p)).collect();
        transports.push(UdpTransport::bind(addr_of(id), peer_addrs, timeout)?);
    }

    let mut trainers = Vec::with_capacity(n);
    for id in 0..n as NodeId {
        trainers.push(NodeTrainer::new(config, scenario, id)?);
    }

    let max_round = config.protocol.max_round;
    let mut outcomes: Vec<Option<NodeOutcome>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| -> Result<()> {
        let mut joins = Vec::new();
        for (id, (mut transport, mut trainer)) in transports
            .drain(..)
            .zip(trainers.drain(..))
            .enumerate()
        {
            let neighbor_ids = neighbors[id].clone();
            joins.push(scope.spawn(move || -> Result<NodeOutcome> {
                let initial = trainer.model.extract_params();
                let runtime =
                    NodeRuntime::new(id as NodeId, neighbor_ids.iter().copied(), max_round, initial)?;
                let callback = Box::new(
                    |round: u32, own: &ParamVector, peers: &[(NodeId, ParamVector)]| {
                        trainer.consensus_round(round, own, peers)
                    },
                );
                let mut handle = NodeHandle::new(runtime, callback);
                let params = run_node(&mut handle, &mut transport)?;
                let rounds = handle.runtime().round();
                drop(handle);
                Ok(NodeOutcome {
                    node_id: id as NodeId,
                    params,
                    rounds_run: rounds,
                    round_pred_losses: trainer.round_pred_losses.clone(),
                })
            }));
        }
        for (id, join) in joins.into_iter().enumerate() {
            let outcome = join
                .join()
                .map_err(|_| Error::Transport(format!("node {id} thread panicked")))??;
            outcomes[id] = Some(outcome);
        }
        Ok(())
    })?;
    Ok(outcomes.into_iter().map(|o| o.unwrap()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;

    fn tiny_config(agents: usize) -> ExperimentConfig {
        ExperimentConfig {
            scenario: ScenarioConfig {
                agents,
                beams: 12,
                trajectory: crate::lidar_scenario::TrajectorySpec {
                    scan_spacing: 2.0,
                    ..Default::default()
                },
                ..Default::default()
            },
            model: crate::config::ModelConfig {
                layer_sizes: vec![2, 16, 1],
                hidden_activations: vec![crate::bayesian_nn::Activation::Sine],
                ..Default::default()
            },
            optimizer: crate::config::OptimizerConfig {
                iters_per_round: 3,
                ..Default::default()
            },
            protocol: crate::config::ProtocolConfig {
                max_round: 3,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn single_agent_trains_without_a_protocol() {
        let config = tiny_config(1);
        let scenario = crate::experiment::scenario::generate_scenario(&config).unwrap();
        let outcomes = train_nodes(&config, &scenario).unwrap();
        assert_eq!(outcomes.len(), 1);
        assert_eq!(outcomes[0].rounds_run, 3);
        assert_eq!(outcomes[0].round_pred_losses.len(), 3);
        assert!(outcomes[0].params.is_finite());
    }

    #[test]
    fn simulated_swarm_runs_every_round_once() {
        let config = tiny_config(3);
        let scenario = crate::experiment::scenario::generate_scenario(&config).unwrap();
        let outcomes = train_nodes(&config, &scenario).unwrap();
        assert_eq!(outcomes.len(), 3);
        for o in &outcomes {
            assert_eq!(o.rounds_run, 3);
            assert_eq!(o.round_pred_losses.len(), 3);
            assert!(o.params.is_finite());
        }
    }

    #[test]
    fn simulated_training_is_deterministic() {
        let config = tiny_config(2);
        let scenario = crate::experiment::scenario::generate_scenario(&config).unwrap();
        let a = train_nodes(&config, &scenario).unwrap();
        let b = train_nodes(&config, &scenario).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.params, y.params);
            assert_eq!(x.round_pred_losses, y.round_pred_losses);
        }
    }

    #[test]
    fn udp_swarm_trains_over_loopback() {
        let mut config = tiny_config(2);
        config.protocol.transport = TransportKind::Udp;
        config.protocol.udp.base_port = 48412;
        let scenario = crate::experiment::scenario::generate_scenario(&config).unwrap();
        let outcomes = train_nodes(&config, &scenario).unwrap();
        assert_eq!(outcomes.len(), 2);
        for o in &outcomes {
            assert_eq!(o.rounds_run, 3);
        }
    }
}

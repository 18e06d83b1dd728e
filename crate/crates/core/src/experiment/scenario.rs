//! Scenario assembly: environment, trajectories, scans, and per-agent
//! train/holdout datasets, all derived deterministically from the config.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bayesian_nn::Example;
use crate::config::{mix_seed, ExperimentConfig};
use crate::error::Result;
use crate::lidar_scenario::{
    agent_partition, build_dataset, generate_environment, simulate_scan, EnvSpec, Environment,
    LidarDataset, LidarScan, Trajectory,
};

const SEED_ENV: u64 = 1;
const SEED_DATA: u64 = 2;
const SEED_SPLIT: u64 = 3;

#[derive(Debug, Clone)]
pub struct AgentData {
    pub trajectory: Trajectory,
    pub dataset: LidarDataset,
    pub train: Vec<Example>,
    pub holdout: Vec<Example>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub env: Environment,
    pub agents: Vec<AgentData>,
}

pub fn generate_scenario(config: &ExperimentConfig) -> Result<Scenario> {
    let sc = &config.scenario;
    let env_spec = EnvSpec {
        seed: mix_seed(config.master_seed, SEED_ENV, sc.env.seed),
        ..sc.env
    };
    let env = generate_environment(&env_spec)?;
    let trajectories = agent_partition(&env, sc.agents, &sc.trajectory)?;

    let mut agents = Vec::with_capacity(trajectories.len());
    for trajectory in trajectories {
        let agent = trajectory.agent_id;
        let scans: Vec<LidarScan> = trajectory
            .poses
            .iter()
            .map(|p| simulate_scan(&env, *p, sc.beams, sc.max_range))
            .collect::<Result<_>>()?;
        let mut dataset = build_dataset(
            &scans,
            sc.free_per_beam,
            mix_seed(config.master_seed, SEED_DATA, sc.data_seed.wrapping_add(agent as u64)),
        );
        dataset.set_agent_id(agent);

        let examples = dataset.to_examples();
        let mut order: Vec<usize> = (0..examples.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(
            config.master_seed,
            SEED_SPLIT,
            sc.data_seed.wrapping_add(agent as u64),
        ));
        order.shuffle(&mut rng);
        let holdout_len = (examples.len() as f64 * sc.holdout_fraction).floor() as usize;
        let mut holdout = Vec::with_capacity(holdout_len);
        let mut train = Vec::with_capacity(examples.len() - holdout_len);
        for (k, idx) in order.into_iter().enumerate() {
            if k < holdout_len {
                holdout.push(examples[idx].clone());
            } else {
                train.push(examples[idx].clone());
            }
        }
        agents.push(AgentData {
            trajectory,
            dataset,
            train,
            holdout,
        });
    }
    Ok(Scenario { env, agents })
}

impl Scenario {
    /// All labeled points pooled across agents (the density model's input).
    pub fn pooled_dataset(&self) -> LidarDataset {
        let sets: Vec<&LidarDataset> = self.agents.iter().map(|a| &a.dataset).collect();
        LidarDataset::merged(&sets)
    }
}

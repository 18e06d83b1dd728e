//! End-to-end orchestration: scenario generation, distributed or single-agent
//! training, evaluation grids, comparison metrics, and artifact output.

mod metrics;
mod report;
mod scenario;
mod training;

use std::path::Path;
use std::time::Instant;

pub use metrics::{
    correlation_report, holdout_accuracy, mean_grid, median, occupancy_iou, rasterize_truth,
    region_split_medians, spearman, support_mask, uncertainty_grid,
};
pub use report::{ComparisonReport, NodeReport, RunReport};
pub use scenario::{generate_scenario, AgentData, Scenario};
pub use training::{build_node_model, train_nodes, NodeOutcome};

use crate::config::{mix_seed, ExperimentConfig};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::kde_uncertainty::{fit_kde, DensityModel};
use crate::lidar_scenario::Point;

const SEED_EVAL: u64 = 8;

/// Everything a run produced, in memory; files land in the output directory.
pub struct RunOutputs {
    pub report: RunReport,
    pub scenario: Scenario,
    pub outcomes: Vec<NodeOutcome>,
    pub mean_grids: Vec<GridField>,
    pub std_grids: Vec<GridField>,
    pub density: GridField,
    pub truth: GridField,
}

fn stage<T>(module: &'static str, round: u32, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        already @ Error::Run { .. } => already,
        other => Error::Run {
            module,
            round,
            source: Box::new(other),
        },
    })
}

/// Write a grid as both CSV and PGM under `dir/stem.{csv,pgm}`.
pub fn render_grid(grid: &GridField, dir: &Path, stem: &str) -> Result<()> {
    if !grid.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "grid {stem} contains non-finite values"
        )));
    }
    grid.write_csv(&dir.join(format!("{stem}.csv")))?;
    grid.write_pgm(&dir.join(format!("{stem}.pgm")))?;
    Ok(())
}

/// Fit the density model over a dataset's points.
pub fn fit_scenario_density(points: &[Point]) -> Result<DensityModel> {
    fit_kde(points)
}

fn prepare_out_dir(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    std::fs::write(out_dir.join("config.json"), config.to_json())
        .map_err(|e| Error::io(out_dir.join("config.json"), e))
}

/// Scenario generation only: environment and per-agent datasets.
pub fn run_generate(config: &ExperimentConfig, out_dir: &Path) -> Result<Scenario> {
    prepare_out_dir(config, out_dir)?;
    let scenario = stage("lidar_scenario", 0, generate_scenario(config))?;
    write_scenario(&scenario, out_dir)?;
    Ok(scenario)
}

/// Regenerate the scenario deterministically, train, and store the final
/// parameters of every node.
pub fn run_train(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<NodeOutcome>> {
    prepare_out_dir(config, out_dir)?;
    let scenario = stage("lidar_scenario", 0, generate_scenario(config))?;
    let outcomes = stage("peer_protocol", 0, train_nodes(config, &scenario))?;
    write_params(&outcomes, out_dir)?;
    Ok(outcomes)
}

/// Evaluate stored parameters (`params_<id>.bin` in the output directory)
/// against the regenerated scenario.
pub fn run_evaluate(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutputs> {
    let started = Instant::now();
    prepare_out_dir(config, out_dir)?;
    let scenario = stage("lidar_scenario", 0, generate_scenario(config))?;
    let mut outcomes = Vec::with_capacity(scenario.agents.len());
    for id in 0..scenario.agents.len() as u32 {
        let path = out_dir.join(format!("params_{id}.bin"));
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        outcomes.push(NodeOutcome {
            node_id: id,
            params: crate::bayesian_nn::ParamVector::from_bytes(&bytes)?,
            rounds_run: config.protocol.max_round,
            round_pred_losses: Vec::new(),
        });
    }
    evaluate_and_report(config, scenario, outcomes, out_dir, started)
}

/// Full pipeline: generate, train, evaluate, write artifacts.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutputs> {
    let started = Instant::now();
    prepare_out_dir(config, out_dir)?;
    let scenario = stage("lidar_scenario", 0, generate_scenario(config))?;
    write_scenario(&scenario, out_dir)?;
    let outcomes = stage("peer_protocol", 0, train_nodes(config, &scenario))?;
    write_params(&outcomes, out_dir)?;
    evaluate_and_report(config, scenario, outcomes, out_dir, started)
}

fn write_params(outcomes: &[NodeOutcome], out_dir: &Path) -> Result<()> {
    for outcome in outcomes {
        let path = out_dir.join(format!("params_{}.bin", outcome.node_id));
        std::fs::write(&path, outcome.params.to_bytes()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn evaluate_and_report(
    config: &ExperimentConfig,
    scenario: Scenario,
    outcomes: Vec<NodeOutcome>,
    out_dir: &Path,
    started: Instant,
) -> Result<RunOutputs> {
    let [nx, ny] = config.evaluation.resolution;
    let region = scenario.env.bounds;
    let truth = stage("experiment", 0, rasterize_truth(&scenario.env, &region, nx, ny))?;

    // Density over the pooled observed points of this configuration.
    let pooled = scenario.pooled_dataset();
    let density_model = stage("kde_uncertainty", 0, fit_kde(&pooled.positions()))?;
    let density = stage(
        "kde_uncertainty",
        0,
        density_model.density_grid(&region, nx, ny),
    )?;
    render_grid(&density, out_dir, "density")?;

    let mut nodes = Vec::new();
    let mut mean_grids = Vec::new();
    let mut std_grids = Vec::new();
    for outcome in &outcomes {
        let id = outcome.node_id;
        let mut model = build_node_model(config, &scenario, id)?;
        model.load_params(&outcome.params)?;

        let (mean_map, std_map) = stage(
            "experiment",
            outcome.rounds_run,
            uncertainty_grid(
                &model,
                &region,
                nx,
                ny,
                config.evaluation.mc_passes,
                mix_seed(
                    config.master_seed,
                    SEED_EVAL,
                    config.evaluation.eval_seed.wrapping_add(id as u64),
                ),
            ),
        )?;
        render_grid(&mean_map, out_dir, &format!("map_{id}"))?;
        render_grid(&std_map, out_dir, &format!("uncertainty_{id}"))?;

        let own_region = scenario.agents[id as usize].trajectory.region;
        let accuracy = holdout_accuracy(
            &model,
            &scenario.agents[id as usize].holdout,
            config.evaluation.mc_passes,
            mix_seed(
                config.master_seed,
                SEED_EVAL,
                config.evaluation.eval_seed.wrapping_add(1000 + id as u64),
            ),
        )?;
        let (median_own, median_elsewhere) = region_split_medians(&std_map, &own_region);
        nodes.push(NodeReport {
            node_id: id,
            rounds_run: outcome.rounds_run,
            final_pred_loss: outcome.final_pred_loss(),
            holdout_accuracy: accuracy,
            mean_uncertainty: std_map.mean(),
            median_uncertainty_own_region: median_own,
            median_uncertainty_elsewhere: median_elsewhere,
            iou_own_region: occupancy_iou(&mean_map, &truth, 0.5, Some(&own_region))?,
            iou_full: occupancy_iou(&mean_map, &truth, 0.5, None)?,
            spearman_vs_density: correlation_report(&std_map, &density).ok(),
        });
        mean_grids.push(mean_map);
        std_grids.push(std_map);
    }

    let swarm_std = mean_grid(&std_grids)?;
    let report = RunReport {
        agents: scenario.agents.len(),
        max_round: config.protocol.max_round,
        swarm_mean_uncertainty: swarm_std.mean(),
        swarm_spearman_vs_density: correlation_report(&swarm_std, &density).ok(),
        nodes,
        config: config.clone(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(out_dir, "report.json", &report)?;

    Ok(RunOutputs {
        report,
        scenario,
        outcomes,
        mean_grids,
        std_grids,
        density,
        truth,
    })
}

fn write_scenario(scenario: &Scenario, out_dir: &Path) -> Result<()> {
    write_json(out_dir, "environment.json", &scenario.env)?;
    for agent in &scenario.agents {
        let id = agent.trajectory.agent_id;
        agent
            .dataset
            .write_csv(&out_dir.join(format!("data_{id}.csv")))?;
        agent
            .dataset
            .write_binary(&out_dir.join(format!("data_{id}.lds")))?;
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialize {name}: {e}")))?;
    std::fs::write(&path, text).map_err(|e| Error::io(path, e))
}

/// The qualitative comparison: the configured swarm against a single agent
/// with identical seeds. Artifacts land under `out_dir/swarm` and
/// `out_dir/single`.
pub fn run_comparison(config: &ExperimentConfig, out_dir: &Path) -> Result<ComparisonReport> {
    if config.scenario.agents < 2 {
        return Err(Error::Config(
            "comparison needs a swarm configuration with agents >= 2".into(),
        ));
    }
    let mut single_config = config.clone();
    single_config.scenario.agents = 1;

    let swarm = run_experiment(config, &out_dir.join("swarm"))?;
    let single = run_experiment(&single_config, &out_dir.join("single"))?;

    // Density support comparison over identically shaped grids.
    let threshold = config.evaluation.density_support_threshold;
    let swarm_support = support_mask(&swarm.density, threshold);
    let single_support = support_mask(&single.density, threshold);
    let single_cells = single_support.iter().filter(|&&b| b).count();
    let swarm_cells = swarm_support.iter().filter(|&&b| b).count();
    let subset = single_support
        .iter()
        .zip(&swarm_support)
        .all(|(&s, &w)| !s || w);
    let strict = subset && swarm_cells > single_cells;

    let single_node = &single.report.nodes[0];
    let report = ComparisonReport {
        swarm_agents: swarm.report.agents,
        swarm_mean_uncertainty: swarm.report.swarm_mean_uncertainty,
        single_mean_uncertainty: single.report.swarm_mean_uncertainty,
        single_median_visited: single_node.median_uncertainty_own_region,
        single_median_unvisited: single_node.median_uncertainty_elsewhere,
        unvisited_over_visited: single_node.median_uncertainty_elsewhere
            / single_node.median_uncertainty_own_region,
        swarm_spearman_vs_density: swarm.report.swarm_spearman_vs_density,
        single_support_cells: single_cells,
        swarm_support_cells: swarm_cells,
        single_support_is_strict_subset: strict,
    };
    write_json(out_dir, "comparison.json", &report)?;
    Ok(report)
}

//! Command-line driver: scenario generation, distributed training,
//! evaluation, and the swarm-vs-single comparison, all from one JSON config.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use swarmmap::config::{ExperimentConfig, TransportKind};
use swarmmap::experiment;

#[derive(Parser)]
#[command(
    name = "swarmmap",
    about = "Decentralized Bayesian occupancy mapping testbed",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (JSON); defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; defaults to a timestamped directory under ./runs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config's transport.
    #[arg(long, global = true, value_enum)]
    transport: Option<TransportArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransportArg {
    Simulated,
    Udp,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the environment and per-agent datasets.
    Generate,
    /// Train all agents and store their final parameters.
    Train,
    /// Evaluate stored parameters: maps, uncertainty, density, report.
    Evaluate,
    /// Run the swarm and a single agent on identical seeds and compare.
    Compare,
    /// Generate, train, and evaluate in one go.
    All,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Train => "train",
            Command::Evaluate => "evaluate",
            Command::Compare => "compare",
            Command::All => "all",
        }
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(transport) = cli.transport {
        config.protocol.transport = match transport {
            TransportArg::Simulated => TransportKind::Simulated,
            TransportArg::Udp => TransportKind::Udp,
        };
    }
    Ok(config)
}

fn resolve_out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| {
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        PathBuf::from("runs").join(format!("{stamp}-{}", cli.command.name()))
    })
}

fn print_report(report: &experiment::RunReport, out_dir: &Path) {
    println!(
        "run complete: {} agent(s), {} round(s), {:.1}s",
        report.agents, report.max_round, report.wall_clock_seconds
    );
    for node in &report.nodes {
        println!(
            "  node {}: holdout accuracy {:.3}, mean uncertainty {:.4}, IoU(own region) {:.3}",
            node.node_id, node.holdout_accuracy, node.mean_uncertainty, node.iou_own_region
        );
    }
    if let Some(rho) = report.swarm_spearman_vs_density {
        println!("  spearman(uncertainty, density) = {rho:.3}");
    }
    println!("artifacts in {}", out_dir.display());
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let config = load_config(&cli)?;
    let out_dir = resolve_out_dir(&cli);

    match cli.command {
        Command::Generate => {
            let scenario = experiment::run_generate(&config, &out_dir)?;
            let points: usize = scenario.agents.iter().map(|a| a.dataset.len()).sum();
            println!(
                "generated {} agent dataset(s), {} labeled points, {} obstacle(s)",
                scenario.agents.len(),
                points,
                scenario.env.obstacles.len()
            );
            println!("artifacts in {}", out_dir.display());
        }
        Command::Train => {
            let outcomes = experiment::run_train(&config, &out_dir)?;
            for o in &outcomes {
                println!(
                    "  node {}: {} round(s), final prediction loss {:?}",
                    o.node_id,
                    o.rounds_run,
                    o.final_pred_loss()
                );
            }
            println!("parameters stored in {}", out_dir.display());
        }
        Command::Evaluate => {
            let outputs = experiment::run_evaluate(&config, &out_dir)?;
            print_report(&outputs.report, &out_dir);
        }
        Command::All => {
            let outputs = experiment::run_experiment(&config, &out_dir)?;
            print_report(&outputs.report, &out_dir);
        }
        Command::Compare => {
            let report = experiment::run_comparison(&config, &out_dir)?;
            println!(
                "swarm mean uncertainty {:.5} vs single {:.5}",
                report.swarm_mean_uncertainty, report.single_mean_uncertainty
            );
            println!(
                "single agent unvisited/visited uncertainty ratio: {:.2}",
                report.unvisited_over_visited
            );
            if let Some(rho) = report.swarm_spearman_vs_density {
                println!("swarm spearman(uncertainty, density) = {rho:.3}");
            }
            println!(
                "density support: single {} cells, swarm {} cells, strict subset: {}",
                report.single_support_cells,
                report.swarm_support_cells,
                report.single_support_is_strict_subset
            );
            println!("artifacts in {}", out_dir.display());
        }
    }
    Ok(())
}

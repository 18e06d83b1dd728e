//! Run reports written as `report.json`.

use crate::config::ExperimentConfig;
use crate::peer_protocol::NodeId;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct NodeReport {
    pub node_id: NodeId,
    pub rounds_run: u32,
    /// Absent when evaluation ran from stored parameters without a training
    /// trace.
    pub final_pred_loss: Option<f64>,
    pub holdout_accuracy: f64,
    pub mean_uncertainty: f64,
    pub median_uncertainty_own_region: f64,
    pub median_uncertainty_elsewhere: f64,
    /// IoU of the thresholded mean map against ground truth, over the node's
    /// own region and over the full evaluation region.
    pub iou_own_region: f64,
    pub iou_full: f64,
    /// Spearman correlation of this node's uncertainty grid against the
    /// pooled data density; absent when undefined (constant grid).
    pub spearman_vs_density: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunReport {
    pub agents: usize,
    pub max_round: u32,
    pub nodes: Vec<NodeReport>,
    /// Mean of the per-node mean uncertainties over the full region.
    pub swarm_mean_uncertainty: f64,
    /// Spearman correlation of the node-averaged uncertainty grid against
    /// the pooled data density.
    pub swarm_spearman_vs_density: Option<f64>,
    /// Verbatim echo of the configuration that produced this run.
    pub config: ExperimentConfig,
    /// Informational only; excluded from the serialized report so repeated
    /// runs stay byte-identical.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

/// Cross-run comparison of a swarm against a single agent on identical seeds.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ComparisonReport {
    pub swarm_agents: usize,
    pub swarm_mean_uncertainty: f64,
    pub single_mean_uncertainty: f64,
    /// Single agent's median uncertainty inside / outside its own region.
    pub single_median_visited: f64,
    pub single_median_unvisited: f64,
    pub unvisited_over_visited: f64,
    pub swarm_spearman_vs_density: Option<f64>,
    /// Density support of the single agent's data vs the pooled swarm data.
    pub single_support_cells: usize,
    pub swarm_support_cells: usize,
    pub single_support_is_strict_subset: bool,
}

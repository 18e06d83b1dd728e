//! Synthetic collaborative-mapping workload: environments, per-agent
//! trajectories, ray-cast LiDAR scans, and labeled occupancy datasets.

mod dataset;
mod geometry;
mod scan;
mod trajectory;

pub use dataset::{
    build_dataset, LabeledPoint, LidarDataset, FREE_T_MAX, FREE_T_MIN, LABEL_FREE, LABEL_OCCUPIED,
};
pub use geometry::{
    generate_environment, EnvSpec, Environment, Obstacle, Point, RayHit, Rect, Segment,
};
pub use scan::{simulate_scan, LidarBeam, LidarScan};
pub use trajectory::{agent_partition, region_grid, Trajectory, TrajectorySpec};

#[cfg(test)]
mod tests {
    use super::*;

    /// Label soundness over a generated scenario: every occupied point lies
    /// on an obstacle (or bounds) boundary, and every free point has clear
    /// line of sight from its scan origin.
    #[test]
    fn labels_are_geometrically_sound() {
        let env = generate_environment(&EnvSpec::default()).unwrap();
        let spec = TrajectorySpec::default();
        let trajectories = agent_partition(&env, 2, &spec).unwrap();
        for traj in &trajectories {
            let scans: Vec<LidarScan> = traj
                .poses
                .iter()
                .step_by(8)
                .map(|p| simulate_scan(&env, *p, 16, 5.0).unwrap())
                .collect();
            let ds = build_dataset(&scans, 2, 3);
            for p in &ds.points {
                if p.label == LABEL_OCCUPIED {
                    let d_obstacle = env.obstacle_boundary_distance(p.position);
                    let d_bounds = env
                        .bounds
                        .edges()
                        .iter()
                        .map(|s| s.distance_to_point(p.position))
                        .fold(f64::INFINITY, f64::min);
                    assert!(
                        d_obstacle.min(d_bounds) < 1e-6,
                        "occupied point off any boundary: ({}, {})",
                        p.position.x,
                        p.position.y
                    );
                } else {
                    // Re-cast toward the point: nothing may block the segment
                    // strictly before the point.
                    let origin = scans[p.scan_index as usize].origin;
                    let delta = p.position.sub(origin);
                    let dist = delta.norm();
                    let angle = delta.y.atan2(delta.x);
                    let hit = env.cast_ray(origin, angle, 1e6).unwrap();
                    if let Some(h) = hit {
                        assert!(
                            h.range >= dist - 1e-6,
                            "free point occluded: range {} < {}",
                            h.range,
                            dist
                        );
                    }
                }
            }
        }
    }
}

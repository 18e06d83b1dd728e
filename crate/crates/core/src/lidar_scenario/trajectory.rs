//! Agent trajectories with spatio-temporal locality: the bounds are split
//! into a grid of regions and each agent patrols a waypoint loop inside its
//! own region.

use super::geometry::{Environment, Point, Rect};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TrajectorySpec {
    /// Region grid laid over the environment bounds.
    pub region_rows: usize,
    pub region_cols: usize,
    /// Patrol ring inset as a fraction of the smaller region dimension.
    pub ring_inset: f64,
    /// Distance between consecutive scan poses along the loop (meters).
    pub scan_spacing: f64,
    /// Poses closer than this to an obstacle are skipped.
    pub clearance: f64,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        TrajectorySpec {
            region_rows: 2,
            region_cols: 2,
            ring_inset: 0.18,
            scan_spacing: 0.25,
            clearance: 0.35,
        }
    }
}

/// One agent's patrol: its region and the interpolated scan poses.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub agent_id: u32,
    pub region: Rect,
    pub waypoints: Vec<Point>,
    pub poses: Vec<Point>,
}

/// The grid of regions covering `bounds`, row-major from the minimum corner.
pub fn region_grid(bounds: &Rect, rows: usize, cols: usize) -> Result<Vec<Rect>> {
    if rows == 0 || cols == 0 {
        return Err(Error::Config("region grid needs rows, cols >= 1".into()));
    }
    let (w, h) = (bounds.width() / cols as f64, bounds.height() / rows as f64);
    let mut regions = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            regions.push(Rect::new(
                bounds.min.x + c as f64 * w,
                bounds.min.y + r as f64 * h,
                bounds.min.x + (c + 1) as f64 * w,
                bounds.min.y + (r + 1) as f64 * h,
            )?);
        }
    }
    Ok(regions)
}

/// Build one trajectory per agent, each confined to its own region.
/// Fails when there are more agents than regions.
pub fn agent_partition(
    env: &Environment,
    n_agents: usize,
    spec: &TrajectorySpec,
) -> Result<Vec<Trajectory>> {
    if n_agents == 0 {
        return Err(Error::Config("need at least one agent".into()));
    }
    let regions = region_grid(&env.bounds, spec.region_rows, spec.region_cols)?;
    if n_agents > regions.len() {
        return Err(Error::Config(format!(
            "{n_agents} agents need {n_agents} disjoint regions but the grid has {}",
            regions.len()
        )));
    }
    if !(spec.ring_inset > 0.0 && spec.ring_inset < 0.5) {
        return Err(Error::Config("ring_inset must be in (0, 0.5)".into()));
    }
    if !(spec.scan_spacing > 0.0) {
        return Err(Error::Config("scan_spacing must be positive".into()));
    }
    let mut trajectories = Vec::with_capacity(n_agents);
    for (agent, region) in regions.iter().take(n_agents).enumerate() {
        let inset = spec.ring_inset * region.width().min(region.height());
        let ring = region.inset(inset)?;
        let corners = [
            ring.min,
            Point::new(ring.max.x, ring.min.y),
            ring.max,
            Point::new(ring.min.x, ring.max.y),
            ring.min,
        ];
        let mut poses = Vec::new();
        for pair in corners.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let length = a.distance(b);
            let steps = (length / spec.scan_spacing).floor() as usize;
            for k in 0..steps {
                let t = k as f64 * spec.scan_spacing / length;
                let p = a.add(b.sub(a).scale(t));
                if env.bounds.contains_strict(p)
                    && !env.inside_obstacle(p)
                    && env.obstacle_boundary_distance(p) >= spec.clearance
                {
                    poses.push(p);
                }
            }
        }
        if poses.is_empty() {
            return Err(Error::Config(format!(
                "agent {agent}: region is fully blocked, no reachable poses"
            )));
        }
        trajectories.push(Trajectory {
            agent_id: agent as u32,
            region: *region,
            waypoints: corners.to_vec(),
            poses,
        });
    }
    Ok(trajectories)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lidar_scenario::geometry::{generate_environment, EnvSpec};

    fn default_env() -> Environment {
        generate_environment(&EnvSpec::default()).unwrap()
    }

    #[test]
    fn single_agent_is_confined_to_the_first_region() {
        let env = default_env();
        let spec = TrajectorySpec::default();
        let trajectories = agent_partition(&env, 1, &spec).unwrap();
        assert_eq!(trajectories.len(), 1);
        let t = &trajectories[0];
        for p in &t.poses {
            assert!(t.region.contains(*p), "pose ({}, {}) left its region", p.x, p.y);
        }
        // The first region is the lower-left quadrant of the default layout.
        assert_eq!(t.region.min, env.bounds.min);
    }

    #[test]
    fn four_agents_get_one_quadrant_each() {
        let env = default_env();
        let trajectories = agent_partition(&env, 4, &TrajectorySpec::default()).unwrap();
        assert_eq!(trajectories.len(), 4);
        for (i, t) in trajectories.iter().enumerate() {
            assert_eq!(t.agent_id, i as u32);
            for p in &t.poses {
                assert!(t.region.contains(*p));
            }
        }
        // Regions are pairwise disjoint up to shared borders.
        for i in 0..4 {
            for j in (i + 1)..4 {
                let a = trajectories[i].region;
                let b = trajectories[j].region;
                let overlap_w = (a.max.x.min(b.max.x) - a.min.x.max(b.min.x)).max(0.0);
                let overlap_h = (a.max.y.min(b.max.y) - a.min.y.max(b.min.y)).max(0.0);
                assert_eq!(overlap_w * overlap_h, 0.0);
            }
        }
    }

    #[test]
    fn more_agents_than_regions_is_a_configuration_error() {
        let env = default_env();
        assert!(matches!(
            agent_partition(&env, 5, &TrajectorySpec::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn poses_avoid_obstacles() {
        let env = default_env();
        let spec = TrajectorySpec::default();
        for t in agent_partition(&env, 4, &spec).unwrap() {
            for p in &t.poses {
                assert!(!env.inside_obstacle(*p));
                assert!(env.obstacle_boundary_distance(*p) >= spec.clearance - 1e-12);
            }
        }
    }

    #[test]
    fn visited_cell_overlap_between_agents_stays_below_the_bound() {
        // Grid-visitation oracle: mark the cells each agent's poses touch and
        // measure pairwise overlap relative to the smaller visited set.
        let env = default_env();
        let trajectories = agent_partition(&env, 4, &TrajectorySpec::default()).unwrap();
        let cell = 0.5;
        let visited: Vec<std::collections::HashSet<(i64, i64)>> = trajectories
            .iter()
            .map(|t| {
                t.poses
                    .iter()
                    .map(|p| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64))
                    .collect()
            })
            .collect();
        for i in 0..visited.len() {
            for j in (i + 1)..visited.len() {
                let inter = visited[i].intersection(&visited[j]).count() as f64;
                let smaller = visited[i].len().min(visited[j].len()) as f64;
                assert!(
                    inter / smaller <= 0.20,
                    "agents {i}/{j} overlap {}",
                    inter / smaller
                );
            }
        }
    }
}

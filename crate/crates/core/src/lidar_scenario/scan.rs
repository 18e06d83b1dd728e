//! Simulated LiDAR sweeps.

use super::geometry::{Environment, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarBeam {
    pub angle: f64,
    /// Nearest obstacle/bounds intersection, if within range.
    pub hit: Option<Point>,
    /// Distance to the hit, or `max_range` on a miss.
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    pub origin: Point,
    pub max_range: f64,
    pub beams: Vec<LidarBeam>,
}

/// One full sweep: `beam_count` rays at angles `2*pi*k / beam_count`.
pub fn simulate_scan(
    env: &Environment,
    origin: Point,
    beam_count: usize,
    max_range: f64,
) -> Result<LidarScan> {
    if beam_count == 0 {
        return Err(Error::InvalidArgument("beam_count must be >= 1".into()));
    }
    let mut beams = Vec::with_capacity(beam_count);
    for k in 0..beam_count {
        let angle = std::f64::consts::TAU * k as f64 / beam_count as f64;
        let hit = env.cast_ray(origin, angle, max_range)?;
        beams.push(match hit {
            Some(h) => LidarBeam {
                angle,
                hit: Some(h.point),
                range: h.range,
            },
            None => LidarBeam {
                angle,
                hit: None,
                range: max_range,
            },
        });
    }
    Ok(LidarScan {
        origin,
        max_range,
        beams,
    })
}

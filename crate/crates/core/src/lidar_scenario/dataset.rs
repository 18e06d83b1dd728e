//! Labeled occupancy datasets derived from scans, with CSV and binary
//! persistence.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::geometry::Point;
use super::scan::LidarScan;
use crate::bayesian_nn::Example;
use crate::error::{Error, Result};

pub const LABEL_FREE: u8 = 0;
pub const LABEL_OCCUPIED: u8 = 1;

/// Free points are sampled at ray fractions inside this open window, keeping
/// them away from the sensor origin and from the occupied hit point.
pub const FREE_T_MIN: f64 = 0.02;
pub const FREE_T_MAX: f64 = 0.98;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    pub position: Point,
    pub label: u8,
    pub agent_id: u32,
    pub scan_index: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LidarDataset {
    pub points: Vec<LabeledPoint>,
}

impl LidarDataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn occupied_count(&self) -> usize {
        self.points.iter().filter(|p| p.label == LABEL_OCCUPIED).count()
    }

    /// Stamp every point with the owning agent.
    pub fn set_agent_id(&mut self, agent_id: u32) {
        for p in self.points.iter_mut() {
            p.agent_id = agent_id;
        }
    }

    /// Merge datasets (e.g. pooling the swarm's data for the density model).
    pub fn merged(sets: &[&LidarDataset]) -> LidarDataset {
        LidarDataset {
            points: sets.iter().flat_map(|d| d.points.iter().copied()).collect(),
        }
    }

    /// Training view: position in, occupancy label out.
    pub fn to_examples(&self) -> Vec<Example> {
        self.points
            .iter()
            .map(|p| Example::new(vec![p.position.x, p.position.y], p.label as f64))
            .collect()
    }

    pub fn positions(&self) -> Vec<Point> {
        self.points.iter().map(|p| p.position).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut emit = || -> std::io::Result<()> {
            writeln!(w, "x,y,label,agent_id,scan_index")?;
            for p in &self.points {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    p.position.x, p.position.y, p.label, p.agent_id, p.scan_index
                )?;
            }
            w.flush()
        };
        emit().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<LidarDataset> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut points = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if lineno == 0 {
                continue; // header
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Decode(format!(
                    "{}: line {} has {} fields, expected 5",
                    path.display(),
                    lineno + 1,
                    fields.len()
                )));
            }
            let parse_f = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| {
                    Error::Decode(format!("{}: line {}: {e}", path.display(), lineno + 1))
                })
            };
            let parse_u = |s: &str| {
                s.trim().parse::<u32>().map_err(|e| {
                    Error::Decode(format!("{}: line {}: {e}", path.display(), lineno + 1))
                })
            };
            points.push(LabeledPoint {
                position: Point::new(parse_f(fields[0])?, parse_f(fields[1])?),
                label: parse_u(fields[2])? as u8,
                agent_id: parse_u(fields[3])?,
                scan_index: parse_u(fields[4])?,
            });
        }
        Ok(LidarDataset { points })
    }

    /// Binary cache: `LDS1`, point count, then per point
    /// `(f64 x, f64 y, u8 label, u32 agent_id, u32 scan_index)`, little-endian.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut emit = || -> std::io::Result<()> {
            w.write_all(b"LDS1")?;
            w.write_all(&(self.points.len() as u64).to_le_bytes())?;
            for p in &self.points {
                w.write_all(&p.position.x.to_le_bytes())?;
                w.write_all(&p.position.y.to_le_bytes())?;
                w.write_all(&[p.label])?;
                w.write_all(&p.agent_id.to_le_bytes())?;
                w.write_all(&p.scan_index.to_le_bytes())?;
            }
            w.flush()
        };
        emit().map_err(|e| Error::io(path, e))
    }

    pub fn read_binary(path: &Path) -> Result<LidarDataset> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
        if &magic != b"LDS1" {
            return Err(Error::Decode(format!("{}: bad magic", path.display())));
        }
        let mut count_bytes = [0u8; 8];
        r.read_exact(&mut count_bytes).map_err(|e| Error::io(path, e))?;
        let count = u64::from_le_bytes(count_bytes) as usize;
        let mut points = Vec::with_capacity(count.min(1 << 24));
        let mut rec = [0u8; 25];
        for _ in 0..count {
            r.read_exact(&mut rec).map_err(|e| Error::io(path, e))?;
            points.push(LabeledPoint {
                position: Point::new(
                    f64::from_le_bytes(rec[0..8].try_into().unwrap()),
                    f64::from_le_bytes(rec[8..16].try_into().unwrap()),
                ),
                label: rec[16],
                agent_id: u32::from_le_bytes(rec[17..21].try_into().unwrap()),
                scan_index: u32::from_le_bytes(rec[21..25].try_into().unwrap()),
            });
        }
        Ok(LidarDataset { points })
    }
}

/// Turn scans into supervision: one occupied point per hit beam, plus
/// `free_per_beam` free points at uniform random fractions of each ray
/// (the full ray for misses). Deterministic given the seed.
pub fn build_dataset(scans: &[LidarScan], free_per_beam: usize, rng_seed: u64) -> LidarDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut points = Vec::new();
    for (scan_index, scan) in scans.iter().enumerate() {
        for beam in &scan.beams {
            let dir = Point::new(beam.angle.cos(), beam.angle.sin());
            let endpoint = match beam.hit {
                Some(hit) => {
                    points.push(LabeledPoint {
                        position: hit,
                        label: LABEL_OCCUPIED,
                        agent_id: 0,
                        scan_index: scan_index as u32,
                    });
                    hit
                }
                None => scan.origin.add(dir.scale(scan.max_range)),
            };
            for _ in 0..free_per_beam {
                let t = rng.gen_range(FREE_T_MIN..FREE_T_MAX);
                points.push(LabeledPoint {
                    position: scan.origin.add(endpoint.sub(scan.origin).scale(t)),
                    label: LABEL_FREE,
                    agent_id: 0,
                    scan_index: scan_index as u32,
                });
            }
        }
    }
    LidarDataset { points }
}

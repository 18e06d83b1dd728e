//! 2D geometry: points, rectangles, segments, environments, ray casting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, other: Point) -> Point {
        Point::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Point) -> f64 {
        self.sub(other).norm()
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Result<Self> {
        if !(min_x < max_x && min_y < max_y) {
            return Err(Error::InvalidArgument(format!(
                "degenerate rectangle [{min_x}, {min_y}] x [{max_x}, {max_y}]"
            )));
        }
        Ok(Rect {
            min: Point::new(min_x, min_y),
            max: Point::new(max_x, max_y),
        })
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.min.x + self.max.x), 0.5 * (self.min.y + self.max.y))
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Closed containment (boundary counts as inside).
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Strict interior containment.
    pub fn contains_strict(&self, p: Point) -> bool {
        p.x > self.min.x && p.x < self.max.x && p.y > self.min.y && p.y < self.max.y
    }

    pub fn inset(&self, d: f64) -> Result<Rect> {
        Rect::new(self.min.x + d, self.min.y + d, self.max.x - d, self.max.y - d)
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    /// The four boundary edges.
    pub fn edges(&self) -> [Segment; 4] {
        let a = self.min;
        let b = Point::new(self.max.x, self.min.y);
        let c = self.max;
        let d = Point::new(self.min.x, self.max.y);
        [
            Segment { a, b },
            Segment { a: b, b: c },
            Segment { a: c, b: d },
            Segment { a: d, b: a },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    /// Distance from `p` to the closest point of the segment.
    pub fn distance_to_point(&self, p: Point) -> f64 {
        let e = self.b.sub(self.a);
        let len2 = e.dot(e);
        if len2 == 0.0 {
            return p.distance(self.a);
        }
        let t = (p.sub(self.a).dot(e) / len2).clamp(0.0, 1.0);
        p.distance(self.a.add(e.scale(t)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Obstacle {
    Segment(Segment),
    Box(Rect),
}

impl Obstacle {
    pub fn edges(&self) -> Vec<Segment> {
        match self {
            Obstacle::Segment(s) => vec![*s],
            Obstacle::Box(r) => r.edges().to_vec(),
        }
    }

    /// Whether `p` lies on or inside the obstacle.
    pub fn contains(&self, p: Point) -> bool {
        match self {
            Obstacle::Segment(s) => s.distance_to_point(p) == 0.0,
            Obstacle::Box(r) => r.contains(p),
        }
    }

    /// Distance to the obstacle boundary.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.edges()
            .iter()
            .map(|s| s.distance_to_point(p))
            .fold(f64::INFINITY, f64::min)
    }
}

/// A nearest ray intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub point: Point,
    pub range: f64,
}

/// Bounded 2D world with line-segment and box obstacles. The bounds walls
/// are solid: rays stop at them like at any obstacle.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Environment {
    pub bounds: Rect,
    pub obstacles: Vec<Obstacle>,
}

impl Environment {
    pub fn new(bounds: Rect, obstacles: Vec<Obstacle>) -> Result<Self> {
        for (i, ob) in obstacles.iter().enumerate() {
            match ob {
                Obstacle::Segment(s) => {
                    if s.a == s.b {
                        return Err(Error::InvalidArgument(format!(
                            "obstacle {i}: segment endpoints coincide"
                        )));
                    }
                    if !bounds.contains(s.a) || !bounds.contains(s.b) {
                        return Err(Error::InvalidArgument(format!(
                            "obstacle {i}: segment leaves the bounds"
                        )));
                    }
                }
                Obstacle::Box(r) => {
                    if !bounds.contains(r.min) || !bounds.contains(r.max) {
                        return Err(Error::InvalidArgument(format!(
                            "obstacle {i}: box leaves the bounds"
                        )));
                    }
                }
            }
        }
        Ok(Environment { bounds, obstacles })
    }

    /// Whether `p` lies on or inside any obstacle.
    pub fn inside_obstacle(&self, p: Point) -> bool {
        self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Distance from `p` to the nearest obstacle boundary (bounds excluded).
    pub fn obstacle_boundary_distance(&self, p: Point) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.boundary_distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    fn all_edges(&self) -> impl Iterator<Item = Segment> + '_ {
        self.bounds
            .edges()
            .into_iter()
            .chain(self.obstacles.iter().flat_map(|o| o.edges()))
    }

    /// Nearest intersection of the ray `(origin, angle)` with any obstacle or
    /// the bounds, within `max_range`.
    pub fn cast_ray(&self, origin: Point, angle: f64, max_range: f64) -> Result<Option<RayHit>> {
        if !self.bounds.contains(origin) {
            return Err(Error::InvalidArgument(format!(
                "ray origin ({}, {}) outside bounds",
                origin.x, origin.y
            )));
        }
        if self.inside_obstacle(origin) {
            return Err(Error::InvalidArgument(format!(
                "ray origin ({}, {}) inside an obstacle",
                origin.x, origin.y
            )));
        }
        if !(max_range > 0.0) {
            return Err(Error::InvalidArgument("max_range must be positive".into()));
        }
        let dir = Point::new(angle.cos(), angle.sin());
        let mut best: Option<RayHit> = None;
        for seg in self.all_edges() {
            let e = seg.b.sub(seg.a);
            let denom = dir.cross(e);
            if denom.abs() < 1e-15 {
                continue; // parallel
            }
            let rel = seg.a.sub(origin);
            let t = rel.cross(e) / denom;
            let s = rel.cross(dir) / denom;
            if t >= 0.0 && t <= max_range && (0.0..=1.0).contains(&s) {
                if best.map_or(true, |h| t < h.range) {
                    best = Some(RayHit {
                        point: origin.add(dir.scale(t)),
                        range: t,
                    });
                }
            }
        }
        Ok(best)
    }
}

/// Parameters for procedural environment generation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct EnvSpec {
    pub width: f64,
    pub height: f64,
    pub min_obstacles: usize,
    pub max_obstacles: usize,
    pub min_obstacle_size: f64,
    pub max_obstacle_size: f64,
    /// Clearance kept between obstacles and the bounds walls.
    pub wall_margin: f64,
    pub seed: u64,
}

impl Default for EnvSpec {
    fn default() -> Self {
        EnvSpec {
            width: 20.0,
            height: 20.0,
            min_obstacles: 4,
            max_obstacles: 8,
            min_obstacle_size: 1.2,
            max_obstacle_size: 3.0,
            wall_margin: 1.5,
            seed: 0,
        }
    }
}

/// Seeded procedural room: a bounded rectangle with scattered,
/// non-overlapping box obstacles.
pub fn generate_environment(spec: &EnvSpec) -> Result<Environment> {
    if spec.min_obstacles > spec.max_obstacles {
        return Err(Error::Config("min_obstacles exceeds max_obstacles".into()));
    }
    let bounds = Rect::new(0.0, 0.0, spec.width, spec.height)?;
    let inner = bounds.inset(spec.wall_margin)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let count = rng.gen_range(spec.min_obstacles..=spec.max_obstacles);
    let mut boxes: Vec<Rect> = Vec::new();
    let mut attempts = 0;
    while boxes.len() < count && attempts < 1000 {
        attempts += 1;
        let w = rng.gen_range(spec.min_obstacle_size..=spec.max_obstacle_size);
        let h = rng.gen_range(spec.min_obstacle_size..=spec.max_obstacle_size);
        if inner.width() <= w || inner.height() <= h {
            continue;
        }
        let x = rng.gen_range(inner.min.x..inner.max.x - w);
        let y = rng.gen_range(inner.min.y..inner.max.y - h);
        let candidate = Rect::new(x, y, x + w, y + h)?;
        // Keep a corridor between obstacles so trajectories stay routable.
        let padded = Rect::new(x - 0.8, y - 0.8, x + w + 0.8, y + h + 0.8)?;
        if boxes.iter().any(|b| b.intersects(&padded)) {
            continue;
        }
        boxes.push(candidate);
    }
    Environment::new(bounds, boxes.into_iter().map(Obstacle::Box).collect())
}

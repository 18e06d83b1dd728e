//! Multivariate Gaussian kernel density estimation over observed 2D points.
//!
//! The estimator is `f(x) = 1 / (n |H|) * sum_i K(H^{-1} (x - x_i))` with a
//! standard bivariate normal kernel `K` and bandwidth matrix
//! `H = n^{-1/(d+4)} * Sigma^{1/2}` (the Scott factor scaling the Cholesky
//! root of the sample covariance, d = 2). Evaluation goes through the
//! triangular solve rather than an explicit inverse; tests pin it to the
//! literal inverted-matrix form within 1e-12.

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::lidar_scenario::{Point, Rect};

/// Lower-triangular 2x2 matrix `[[a, 0], [b, c]]` stored as `(a, b, c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerTriangular {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LowerTriangular {
    pub fn identity() -> Self {
        LowerTriangular {
            a: 1.0,
            b: 0.0,
            c: 1.0,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.c
    }

    fn scaled(&self, s: f64) -> Self {
        LowerTriangular {
            a: self.a * s,
            b: self.b * s,
            c: self.c * s,
        }
    }

    /// Solve `L u = v` by forward substitution.
    fn solve(&self, v: Point) -> Point {
        let u1 = v.x / self.a;
        let u2 = (v.y - self.b * u1) / self.c;
        Point::new(u1, u2)
    }
}

/// Fitted Gaussian kernel density model over 2D samples.
#[derive(Debug, Clone)]
pub struct DensityModel {
    samples: Vec<Point>,
    bandwidth_factor: f64,
    covariance_root: LowerTriangular,
    normalization: f64,
}

/// Scott's factor for d = 2: `n^(-1/6)`.
pub fn scott_factor(n: usize) -> f64 {
    (n as f64).powf(-1.0 / 6.0)
}

/// Fit with Scott's rule over the full sample covariance.
pub fn fit_kde(points: &[Point]) -> Result<DensityModel> {
    if points.len() < 3 {
        return Err(Error::DegenerateData(format!(
            "kernel density needs at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(Point::new(0.0, 0.0), |acc, p| acc.add(*p)).scale(1.0 / n);
    let (mut cxx, mut cxy, mut cyy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = p.sub(mean);
        cxx += d.x * d.x;
        cxy += d.x * d.y;
        cyy += d.y * d.y;
    }
    let denom = n - 1.0;
    cxx /= denom;
    cxy /= denom;
    cyy /= denom;
    let det = cxx * cyy - cxy * cxy;
    let scale = cxx.max(cyy);
    if !(det > 1e-12 * scale * scale) || !(cxx > 0.0) {
        return Err(Error::DegenerateData(
            "sample covariance is singular (collinear points)".into(),
        ));
    }
    let a = cxx.sqrt();
    let b = cxy / a;
    let c = (cyy - b * b).sqrt();
    let root = LowerTriangular { a, b, c };
    let factor = scott_factor(points.len());
    DensityModel::with_fixed_bandwidth_internal(points.to_vec(), root.scaled(factor), factor)
}

impl DensityModel {
    /// Bypass fitting and use the given bandwidth matrix directly. Intended
    /// for tests and calibration; accepts any sample count >= 1.
    pub fn with_fixed_bandwidth(points: Vec<Point>, bandwidth: LowerTriangular) -> Result<Self> {
        Self::with_fixed_bandwidth_internal(points, bandwidth, f64::NAN)
    }

    fn with_fixed_bandwidth_internal(
        points: Vec<Point>,
        bandwidth: LowerTriangular,
        factor: f64,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DegenerateData("no sample points".into()));
        }
        if !(bandwidth.a > 0.0 && bandwidth.c > 0.0) {
            return Err(Error::DegenerateData(
                "bandwidth root needs a strictly positive diagonal".into(),
            ));
        }
        let n = points.len() as f64;
        let normalization =
            1.0 / (n * bandwidth.determinant() * 2.0 * std::f64::consts::PI);
        Ok(DensityModel {
            samples: points,
            bandwidth_factor: factor,
            covariance_root: bandwidth,
            normalization,
        })
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    pub fn bandwidth_factor(&self) -> f64 {
        self.bandwidth_factor
    }

    /// The scaled Cholesky root `H` (lower-triangular).
    pub fn bandwidth_root(&self) -> LowerTriangular {
        self.covariance_root
    }

    /// Density at `query`; nonnegative, exact summation over all samples.
    pub fn evaluate(&self, query: Point) -> f64 {
        let mut acc = 0.0;
        for s in &self.samples {
            let u = self.covariance_root.solve(query.sub(*s));
            acc += (-0.5 * (u.x * u.x + u.y * u.y)).exp();
        }
        acc * self.normalization
    }

    /// Density evaluated at each cell center of a grid over `region`.
    pub fn density_grid(&self, region: &Rect, nx: usize, ny: usize) -> Result<GridField> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidArgument(
                "density grid needs at least 2 cells per axis".into(),
            ));
        }
        GridField::from_fn(*region, nx, ny, |p| self.evaluate(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(n: usize, seed: u64, spread: (f64, f64), center: (f64, f64)) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Point::new(
                    center.0 + rng.gen_range(-spread.0..spread.0),
                    center.1 + rng.gen_range(-spread.1..spread.1),
                )
            })
            .collect()
    }

    /// Literal form of the estimator: explicit H^{-1} multiply, plain loop.
    fn naive_density(samples: &[Point], h: LowerTriangular, query: Point) -> f64 {
        let inv_a = 1.0 / h.a;
        let inv_b = -h.b / (h.a * h.c);
        let inv_c = 1.0 / h.c;
        let mut acc = 0.0;
        for s in samples {
            let d = query.sub(*s);
            let u = Point::new(inv_a * d.x, inv_b * d.x + inv_c * d.y);
            let k = (-0.5 * u.dot(u)).exp() / (2.0 * std::f64::consts::PI);
            acc += k;
        }
        acc / (samples.len() as f64 * h.determinant())
    }

    /// Whiten a cloud so its sample covariance is exactly the identity.
    fn whitened(n: usize, seed: u64) -> Vec<Point> {
        let raw = random_cloud(n, seed, (2.0, 1.0), (3.0, -1.0));
        let nf = n as f64;
        let mean = raw
            .iter()
            .fold(Point::new(0.0, 0.0), |a, p| a.add(*p))
            .scale(1.0 / nf);
        let (mut cxx, mut cxy, mut cyy) = (0.0, 0.0, 0.0);
        for p in &raw {
            let d = p.sub(mean);
            cxx += d.x * d.x;
            cxy += d.x * d.y;
            cyy += d.y * d.y;
        }
        cxx /= nf - 1.0;
        cxy /= nf - 1.0;
        cyy /= nf - 1.0;
        let a = cxx.sqrt();
        let b = cxy / a;
        let c = (cyy - b * b).sqrt();
        // x' = L^{-1} (x - mean) has unit sample covariance.
        raw.iter()
            .map(|p| {
                let d = p.sub(mean);
                let u1 = d.x / a;
                let u2 = (d.y - b * u1) / c;
                Point::new(u1, u2)
            })
            .collect()
    }

    #[test]
    fn scott_factor_for_100_points() {
        assert_relative_eq!(scott_factor(100), 0.46415888336127786, epsilon = 1e-12);
    }

    #[test]
    fn unit_covariance_cloud_gets_the_scott_bandwidth_exactly() {
        let points = whitened(100, 5);
        let model = fit_kde(&points).unwrap();
        assert_relative_eq!(model.bandwidth_factor(), scott_factor(100), epsilon = 1e-12);
        let h = model.bandwidth_root();
        assert_relative_eq!(h.a, scott_factor(100), epsilon = 1e-9);
        assert_relative_eq!(h.c, scott_factor(100), epsilon = 1e-9);
        assert!(h.b.abs() < 1e-9);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let points: Vec<Point> = (0..50).map(|i| Point::new(i as f64, 2.0 * i as f64)).collect();
        assert!(matches!(fit_kde(&points), Err(Error::DegenerateData(_))));
        assert!(matches!(fit_kde(&points[..2]), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn single_sample_identity_bandwidth_peaks_at_one_over_two_pi() {
        let model = DensityModel::with_fixed_bandwidth(
            vec![Point::new(0.3, -0.7)],
            LowerTriangular::identity(),
        )
        .unwrap();
        assert_relative_eq!(
            model.evaluate(Point::new(0.3, -0.7)),
            1.0 / (2.0 * std::f64::consts::PI),
            epsilon = 1e-15
        );
        assert_relative_eq!(model.evaluate(Point::new(0.3, -0.7)), 0.159155, epsilon = 1e-6);
    }

    #[test]
    fn far_queries_vanish() {
        let points = random_cloud(50, 3, (1.0, 1.0), (0.0, 0.0));
        let model = fit_kde(&points).unwrap();
        // Far beyond ten bandwidths from every sample.
        assert!(model.evaluate(Point::new(1e3, -1e3)) < 1e-12);
    }

    #[test]
    fn matches_the_naive_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for case in 0..5 {
            let n = rng.gen_range(10..schedule_limit(case));
            let points = random_cloud(n, 100 + case as u64, (2.0, 0.8), (1.0, 4.0));
            let model = fit_kde(&points).unwrap();
            let h = model.bandwidth_root();
            for _ in 0..20 {
                let q = Point::new(rng.gen_range(-3.0..5.0), rng.gen_range(0.0..8.0));
                let fast = model.evaluate(q);
                let naive = naive_density(&points, h, q);
                assert_relative_eq!(fast, naive, max_relative = 1e-12);
            }
        }
        fn schedule_limit(case: usize) -> usize {
            [100, 200, 300, 400, 500][case]
        }
    }

    #[test]
    fn permutation_of_samples_does_not_change_the_density() {
        let points = random_cloud(80, 11, (1.5, 1.5), (0.0, 0.0));
        let mut reversed = points.clone();
        reversed.reverse();
        let a = fit_kde(&points).unwrap();
        let b = fit_kde(&reversed).unwrap();
        let q = Point::new(0.4, -0.2);
        assert_relative_eq!(a.evaluate(q), b.evaluate(q), max_relative = 1e-12);
    }

    #[test]
    fn translation_invariance() {
        let points = random_cloud(60, 13, (1.0, 2.0), (0.0, 0.0));
        let shift = Point::new(123.25, -7.5);
        let shifted: Vec<Point> = points.iter().map(|p| p.add(shift)).collect();
        let a = fit_kde(&points).unwrap();
        let b = fit_kde(&shifted).unwrap();
        let q = Point::new(0.8, 0.1);
        assert_relative_eq!(
            a.evaluate(q),
            b.evaluate(q.add(shift)),
            max_relative = 1e-12
        );
    }

    #[test]
    fn grid_mass_integrates_to_one() {
        let points = random_cloud(200, 17, (1.0, 1.0), (0.0, 0.0));
        let model = fit_kde(&points).unwrap();
        // Enclosing region far beyond the data leaves < 1% of mass outside.
        let region = Rect::new(-8.0, -8.0, 8.0, 8.0).unwrap();
        let grid = model.density_grid(&region, 256, 256).unwrap();
        let mass: f64 = grid.values.iter().sum::<f64>() * grid.cell_area();
        assert!((mass - 1.0).abs() < 0.01, "mass {mass}");
    }

    #[test]
    fn corner_cloud_puts_the_grid_argmax_in_that_corner() {
        let points = random_cloud(120, 19, (0.8, 0.8), (8.0, 8.0));
        let model = fit_kde(&points).unwrap();
        let region = Rect::new(0.0, 0.0, 10.0, 10.0).unwrap();
        let grid = model.density_grid(&region, 64, 64).unwrap();
        let (argmax, _) = grid
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let (ix, iy) = (argmax % 64, argmax / 64);
        let p = grid.cell_center(ix, iy);
        assert!(p.x > 5.0 && p.y > 5.0, "argmax at ({}, {})", p.x, p.y);
    }

    #[test]
    fn uniform_cloud_has_flat_interior_density() {
        let points = random_cloud(4000, 23, (5.0, 5.0), (0.0, 0.0));
        let model = fit_kde(&points).unwrap();
        let region = Rect::new(-3.0, -3.0, 3.0, 3.0).unwrap(); // interior only
        let grid = model.density_grid(&region, 32, 32).unwrap();
        let mean = grid.mean();
        let var = grid
            .values
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / grid.values.len() as f64;
        let cov = var.sqrt() / mean;
        assert!(cov < 0.5, "coefficient of variation {cov}");
    }

    #[test]
    fn tiny_grids_are_rejected() {
        let points = random_cloud(10, 1, (1.0, 1.0), (0.0, 0.0));
        let model = fit_kde(&points).unwrap();
        let region = Rect::new(-1.0, -1.0, 1.0, 1.0).unwrap();
        assert!(model.density_grid(&region, 1, 8).is_err());
    }
}

//! Evaluation metrics: rank correlation, occupancy IoU, held-out accuracy,
//! and region-split summaries.

use crate::bayesian_nn::{BnnModel, Example, NoiseSource};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::lidar_scenario::{Environment, Rect};

/// Spearman rank correlation with midrank ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!(
            "spearman: {} vs {} values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("spearman needs at least 2 values".into()));
    }
    let rx = midranks(xs);
    let ry = midranks(ys);
    pearson(&rx, &ry)
}

/// Average ranks, ties sharing the mean of their rank range (1-based).
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "constant input has no rank variance".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Spearman correlation between two grids of identical shape.
pub fn correlation_report(std_grid: &GridField, density_grid: &GridField) -> Result<f64> {
    if std_grid.nx != density_grid.nx || std_grid.ny != density_grid.ny {
        return Err(Error::Shape(format!(
            "grid shapes differ: {}x{} vs {}x{}",
            std_grid.nx, std_grid.ny, density_grid.nx, density_grid.ny
        )));
    }
    spearman(&std_grid.values, &density_grid.values)
}

/// Monte-Carlo prediction maps: per-cell mean and standard deviation of the
/// transformed output over `mc_passes` stochastic passes.
pub fn uncertainty_grid(
    model: &BnnModel,
    region: &Rect,
    nx: usize,
    ny: usize,
    mc_passes: usize,
    seed: u64,
) -> Result<(GridField, GridField)> {
    if mc_passes < 2 {
        return Err(Error::InvalidArgument(
            "uncertainty grids need mc_passes >= 2".into(),
        ));
    }
    let mut noise = NoiseSource::seeded(seed);
    let mut means = Vec::with_capacity(nx * ny);
    let mut stds = Vec::with_capacity(nx * ny);
    let probe = GridField::from_fn(*region, nx, ny, |_| 0.0)?;
    for iy in 0..ny {
        for ix in 0..nx {
            let c = probe.cell_center(ix, iy);
            let (mean, std) = model.predict_mc(&[c.x, c.y], mc_passes, &mut noise)?;
            means.push(mean[0]);
            stds.push(std[0]);
        }
    }
    Ok((
        GridField::from_values(*region, nx, ny, means)?,
        GridField::from_values(*region, nx, ny, stds)?,
    ))
}

/// Ground-truth occupancy raster: 1 where the cell center lies inside an
/// obstacle or within half a cell diagonal of an obstacle or bounds edge.
pub fn rasterize_truth(env: &Environment, region: &Rect, nx: usize, ny: usize) -> Result<GridField> {
    let dx = region.width() / nx as f64;
    let dy = region.height() / ny as f64;
    let band = 0.5 * (dx * dx + dy * dy).sqrt();
    GridField::from_fn(*region, nx, ny, |p| {
        let in_box = env.inside_obstacle(p);
        let near_edge = env.obstacle_boundary_distance(p) <= band;
        let near_bounds = env
            .bounds
            .edges()
            .iter()
            .map(|s| s.distance_to_point(p))
            .fold(f64::INFINITY, f64::min)
            <= band;
        if in_box || near_edge || near_bounds {
            1.0
        } else {
            0.0
        }
    })
}

/// Intersection-over-union of `pred > threshold` against `truth > 0.5`,
/// optionally restricted to cells whose centers fall in `mask`.
pub fn occupancy_iou(
    pred: &GridField,
    truth: &GridField,
    threshold: f64,
    mask: Option<&Rect>,
) -> Result<f64> {
    if pred.nx != truth.nx || pred.ny != truth.ny {
        return Err(Error::Shape("IoU grids differ in shape".into()));
    }
    let (mut inter, mut union) = (0u64, 0u64);
    for iy in 0..pred.ny {
        for ix in 0..pred.nx {
            if let Some(rect) = mask {
                if !rect.contains(pred.cell_center(ix, iy)) {
                    continue;
                }
            }
            let p = pred.get(ix, iy) > threshold;
            let t = truth.get(ix, iy) > 0.5;
            if p && t {
                inter += 1;
            }
            if p || t {
                union += 1;
            }
        }
    }
    if union == 0 {
        return Err(Error::DegenerateData("IoU undefined: empty union".into()));
    }
    Ok(inter as f64 / union as f64)
}

/// Fraction of held-out points classified correctly by the Monte-Carlo mean
/// prediction thresholded at 0.5.
pub fn holdout_accuracy(
    model: &BnnModel,
    holdout: &[Example],
    mc_passes: usize,
    seed: u64,
) -> Result<f64> {
    if holdout.is_empty() {
        return Err(Error::InvalidArgument("empty holdout set".into()));
    }
    let mut noise = NoiseSource::seeded(seed);
    let mut correct = 0usize;
    for ex in holdout {
        let (mean, _) = model.predict_mc(&ex.input, mc_passes, &mut noise)?;
        let predicted = if mean[0] > 0.5 { 1.0 } else { 0.0 };
        if predicted == ex.target {
            correct += 1;
        }
    }
    Ok(correct as f64 / holdout.len() as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Medians of the grid split by whether cell centers fall inside `region`:
/// `(inside_median, outside_median)`.
pub fn region_split_medians(grid: &GridField, region: &Rect) -> (f64, f64) {
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let v = grid.get(ix, iy);
            if region.contains(grid.cell_center(ix, iy)) {
                inside.push(v);
            } else {
                outside.push(v);
            }
        }
    }
    (median(&inside), median(&outside))
}

/// Support mask: cells whose value reaches `rel_threshold` times the grid
/// maximum.
pub fn support_mask(grid: &GridField, rel_threshold: f64) -> Vec<bool> {
    let (_, max) = grid.min_max();
    let cut = rel_threshold * max;
    grid.values.iter().map(|&v| v >= cut).collect()
}

/// Elementwise mean of equally shaped grids.
pub fn mean_grid(grids: &[GridField]) -> Result<GridField> {
    let first = grids
        .first()
        .ok_or_else(|| Error::InvalidArgument("mean_grid of nothing".into()))?;
    let mut acc = vec![0.0; first.values.len()];
    for g in grids {
        if g.nx != first.nx || g.ny != first.ny {
            return Err(Error::Shape("mean_grid shapes differ".into()));
        }
        for (a, v) in acc.iter_mut().zip(&g.values) {
            *a += v;
        }
    }
    let n = grids.len() as f64;
    for a in acc.iter_mut() {
        *a /= n;
    }
    GridField::from_values(first.region, first.nx, first.ny, acc)
}

//! Dense 2D scalar fields over a rectangular region, with CSV and PGM output.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::lidar_scenario::{Point, Rect};

/// Row-major scalar field; `values[iy * nx + ix]` belongs to the cell center
/// at `(min.x + (ix + 0.5) dx, min.y + (iy + 0.5) dy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub region: Rect,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn from_fn(
        region: Rect,
        nx: usize,
        ny: usize,
        mut f: impl FnMut(Point) -> f64,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument("grid needs nx, ny >= 1".into()));
        }
        let mut values = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                values.push(f(cell_center(&region, nx, ny, ix, iy)));
            }
        }
        Ok(GridField {
            region,
            nx,
            ny,
            values,
        })
    }

    pub fn from_values(region: Rect, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(Error::Shape(format!(
                "{} values for a {nx} x {ny} grid",
                values.len()
            )));
        }
        Ok(GridField {
            region,
            nx,
            ny,
            values,
        })
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point {
        cell_center(&self.region, self.nx, self.ny, ix, iy)
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn cell_area(&self) -> f64 {
        (self.region.width() / self.nx as f64) * (self.region.height() / self.ny as f64)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in &self.values {
            min = min.min(v);
            max = max.max(v);
        }
        (min, max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// CSV layout: a header naming the region and resolution, one metadata
    /// row, then `ny` rows of `nx` values. Floats use the shortest
    /// representation that round-trips exactly.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut emit = || -> std::io::Result<()> {
            writeln!(w, "xmin,ymin,xmax,ymax,nx,ny")?;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                self.region.min.x,
                self.region.min.y,
                self.region.max.x,
                self.region.max.y,
                self.nx,
                self.ny
            )?;
            for iy in 0..self.ny {
                let row: Vec<String> = (0..self.nx)
                    .map(|ix| format!("{}", self.get(ix, iy)))
                    .collect();
                writeln!(w, "{}", row.join(","))?;
            }
            w.flush()
        };
        emit().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<GridField> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let mut next_line = |what: &str| -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Decode(format!("{}: missing {what}", path.display())))?
                .map_err(|e| Error::io(path, e))
        };
        next_line("header")?;
        let meta = next_line("metadata row")?;
        let fields: Vec<&str> = meta.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Decode(format!(
                "{}: metadata row has {} fields",
                path.display(),
                fields.len()
            )));
        }
        let fl = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Decode(format!("{}: {e}", path.display())))
        };
        let us = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| Error::Decode(format!("{}: {e}", path.display())))
        };
        let region = Rect::new(fl(fields[0])?, fl(fields[1])?, fl(fields[2])?, fl(fields[3])?)?;
        let (nx, ny) = (us(fields[4])?, us(fields[5])?);
        let mut values = Vec::with_capacity(nx * ny);
        for _ in 0..ny {
            let row = next_line("value row")?;
            for v in row.split(',') {
                values.push(fl(v)?);
            }
        }
        GridField::from_values(region, nx, ny, values)
    }

    /// 8-bit binary PGM normalized to the grid's own [min, max]; a constant
    /// grid maps to all zeros.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let (min, max) = self.min_max();
        let span = max - min;
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut emit = || -> std::io::Result<()> {
            write!(w, "P5\n{} {}\n255\n", self.nx, self.ny)?;
            let pixels: Vec<u8> = self
                .values
                .iter()
                .map(|&v| {
                    if span > 0.0 {
                        (((v - min) / span) * 255.0).round() as u8
                    } else {
                        0
                    }
                })
                .collect();
            w.write_all(&pixels)?;
            w.flush()
        };
        emit().map_err(|e| Error::io(path, e))
    }
}

fn cell_center(region: &Rect, nx: usize, ny: usize, ix: usize, iy: usize) -> Point {
    let dx = region.width() / nx as f64;
    let dy = region.height() / ny as f64;
    Point::new(
        region.min.x + (ix as f64 + 0.5) * dx,
        region.min.y + (iy as f64 + 0.5) * dy,
    )
}

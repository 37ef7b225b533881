use std::f64::consts::PI;

use ndarray::ArrayView2;
use rayon::prelude::*;

use super::ReportError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeConfig {
    pub bandwidth: f64,
    pub resolution: usize,
    /// Isoline level as a fraction of the grid maximum.
    pub isoline_fraction: f64,
}

impl Default for KdeConfig {
    fn default() -> Self {
        Self {
            bandwidth: 0.4,
            resolution: 200,
            isoline_fraction: 0.30,
        }
    }
}

/// Gaussian kernel density on a regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeGrid {
    pub grid_x: Vec<f64>,
    pub grid_y: Vec<f64>,
    /// `density[iy][ix]`.
    pub density: Vec<Vec<f64>>,
    pub bandwidth: f64,
    pub isoline_level: f64,
}

impl KdeGrid {
    pub fn max_density(&self) -> f64 {
        self.density
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
    }

    pub fn cell_area(&self) -> f64 {
        step(&self.grid_x) * step(&self.grid_y)
    }
}

fn step(axis: &[f64]) -> f64 {
    if axis.len() < 2 {
        0.0
    } else {
        axis[1] - axis[0]
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Isotropic Gaussian KDE of 2-D points over their bounding box expanded by
/// three bandwidths on each side.
pub fn kde_2d(points: ArrayView2<f64>, cfg: &KdeConfig) -> Result<KdeGrid, ReportError> {
    let n = points.nrows();
    if n == 0 || points.ncols() != 2 {
        return Err(ReportError::InvalidParameter(format!(
            "need an N×2 point set with N ≥ 1, got {}×{}",
            n,
            points.ncols()
        )));
    }
    let h = cfg.bandwidth;
    if !(h > 0.0) || cfg.resolution < 2 || !(0.0..=1.0).contains(&cfg.isoline_fraction) {
        return Err(ReportError::InvalidParameter(
            "bandwidth > 0, resolution ≥ 2 and isoline fraction in [0, 1] required".into(),
        ));
    }
    let bounds = |c: usize| {
        let col = points.column(c);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo - 3.0 * h, hi + 3.0 * h)
    };
    let (x0, x1) = bounds(0);
    let (y0, y1) = bounds(1);
    let grid_x = linspace(x0, x1, cfg.resolution);
    let grid_y = linspace(y0, y1, cfg.resolution);
    let norm = 1.0 / (n as f64 * 2.0 * PI * h * h);
    let inv = 1.0 / (2.0 * h * h);
    let density: Vec<Vec<f64>> = grid_y
        .par_iter()
        .map(|&gy| {
            grid_x
                .iter()
                .map(|&gx| {
                    norm * points
                        .rows()
                        .into_iter()
                        .map(|p| {
                            let dx = gx - p[0];
                            let dy = gy - p[1];
                            (-(dx * dx + dy * dy) * inv).exp()
                        })
                        .sum::<f64>()
                })
                .collect()
        })
        .collect();
    let mut grid = KdeGrid {
        grid_x,
        grid_y,
        density,
        bandwidth: h,
        isoline_level: 0.0,
    };
    grid.isoline_level = cfg.isoline_fraction * grid.max_density();
    Ok(grid)
}

//! Time grids, reproducible random streams and the driving processes.

mod fbm;
mod integrand;
mod normal;
mod rng;

pub(crate) use fbm::dot as dot_product;
pub use fbm::{fbm_covariance, fbm_path, FbmGenerator, FbmMethod, CIRCULANT_MIN_CELLS};
pub use integrand::{integrand_path, IntegrandKind, IntegrandSampler, IntegrandSpec, PhiTag};
pub use normal::inverse_normal_cdf;
pub use rng::{lanes, Normals, RandomStream};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform discretisation of `[0, t]` into `n` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    cells: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidGrid("cell count must be at least 1".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        Ok(TimeGrid { horizon, cells })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.cells as f64
    }

    /// `t_i = (i / n) · t`; `t_n` equals the horizon exactly.
    pub fn point(&self, i: usize) -> f64 {
        (i as f64 / self.cells as f64) * self.horizon
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.cells).map(|i| self.point(i))
    }
}

/// A process sampled at every point of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() + 1 {
            return Err(Error::GridMismatch(format!(
                "path has {} values, grid needs {}",
                values.len(),
                grid.cells() + 1
            )));
        }
        Ok(SamplePath { grid, values })
    }

    /// Path whose increments are `increments`, started at zero.
    pub fn from_increments(grid: TimeGrid, increments: &[f64]) -> Result<Self> {
        if increments.len() != grid.cells() {
            return Err(Error::GridMismatch(format!(
                "{} increments for a grid of {} cells",
                increments.len(),
                grid.cells()
            )));
        }
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut acc = 0.0;
        values.push(acc);
        for dx in increments {
            acc += dx;
            values.push(acc);
        }
        Ok(SamplePath { grid, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("path has at least two points")
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SamplePath {
        SamplePath {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Brownian increments `ΔW_i ~ N(0, Δ)`, `i = 1..n`, drawn from `stream`.
pub fn bm_increments(grid: &TimeGrid, stream: &RandomStream) -> Vec<f64> {
    let scale = grid.step().sqrt();
    stream.normals().take(grid.cells()).map(|z| scale * z).collect()
}

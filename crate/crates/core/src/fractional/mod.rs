//! The fractional-martingale core.
//!
//! `M_{t_j} = Σ_{i=1..j} w_{j,i} ξ_{t_{i-1}} ΔW_i`, where `w_{j,i}` is the
//! cell average of `(t_j − s)^α` over `[t_{i-1}, t_i]`. Integrating the kernel
//! per cell keeps the `α < 0` singularity out of any point evaluation, and a
//! single set of Brownian increments drives the value at every `t_j`.

mod calpha;
mod convolve;

pub use calpha::{estimate_c_alpha, CAlphaEstimate, CAlphaEstimator, MIN_RELIABLE_REPLICATES};
pub use convolve::{frac_convolve, ConvolutionMethod, FractionalConvolver, DIRECT_MAX_CELLS};

use serde::{Deserialize, Serialize};

use crate::paths::{SamplePath, TimeGrid};
use crate::stats::CompensatedSum;
use crate::{Error, Result};

/// Fractional order `α ∈ (−½, ½)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > -0.5 && alpha < 0.5 {
            Ok(Alpha(alpha))
        } else {
            Err(Error::constraint(format!(
                "alpha must satisfy -1/2 < alpha < 1/2, got {alpha}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Variation index `β = 2 / (1 + 2α)`.
    pub fn beta(self) -> f64 {
        2.0 / (1.0 + 2.0 * self.0)
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Alpha::new(v)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

impl std::fmt::Display for Alpha {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// `[(r+1)^{α+1} − r^{α+1}] / (α+1)`, evaluated without cancellation for
/// large lags.
pub(crate) fn unit_cell_weight(alpha: f64, lag: usize) -> f64 {
    let a1 = alpha + 1.0;
    if lag == 0 {
        return 1.0 / a1;
    }
    let r = lag as f64;
    r.powf(a1) * (a1 * (1.0 / r).ln_1p()).exp_m1() / a1
}

/// Cell-averaged kernel weights `w_{j,1..j}` for one evaluation time.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    pub j: usize,
    /// `weights[i - 1] = w_{j,i}`.
    pub weights: Vec<f64>,
}

pub fn kernel_weights(alpha: Alpha, grid: &TimeGrid, j: usize) -> Result<KernelWeights> {
    if j == 0 || j > grid.cells() {
        return Err(Error::constraint(format!(
            "kernel index must satisfy 1 <= j <= {}, got {j}",
            grid.cells()
        )));
    }
    let scale = grid.step().powf(alpha.value());
    let weights = (1..=j)
        .map(|i| scale * unit_cell_weight(alpha.value(), j - i))
        .collect();
    Ok(KernelWeights { j, weights })
}

/// Maximum of `|X|` over the grid points.
///
/// This is a lower bound for the continuous-time supremum; empirical tail
/// probabilities built on it can only be smaller than the true ones.
pub fn running_sup(path: &SamplePath) -> f64 {
    path.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `S_{β,m} = Σ_{i=1..m} |X_{t_i} − X_{t_{i−1}}|^β` over the `m`-cell
/// subgrid of the path's grid.
pub fn beta_variation(path: &SamplePath, beta: f64, m: usize) -> Result<f64> {
    let n = path.grid().cells();
    if !(beta >= 1.0) {
        return Err(Error::constraint(format!("beta must be >= 1, got {beta}")));
    }
    if m == 0 || !n.is_multiple_of(m) {
        return Err(Error::constraint(format!(
            "subdivision count {m} must divide the grid's {n} cells"
        )));
    }
    let step = n / m;
    let v = path.values();
    let mut acc = CompensatedSum::new();
    for i in 1..=m {
        let d = (v[i * step] - v[(i - 1) * step]).abs();
        acc.add(if beta == 2.0 { d * d } else { d.powf(beta) });
    }
    Ok(acc.value())
}

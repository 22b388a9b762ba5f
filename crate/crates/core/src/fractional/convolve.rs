use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{unit_cell_weight, Alpha};
use crate::paths::{SamplePath, TimeGrid};
use crate::{Error, Result};

/// Largest grid for which [`ConvolutionMethod::Auto`] picks the direct sum.
pub const DIRECT_MAX_CELLS: usize = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvolutionMethod {
    #[default]
    Auto,
    /// O(n²) sum over cells.
    Direct,
    /// Zero-padded FFT product; same linear convolution in O(n log n).
    Fft,
}

struct Spectral {
    len: usize,
    kernel: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Fractional convolution prepared for one `(α, grid)` pair.
///
/// On a uniform grid `w_{j,i}` depends on `j − i` only, so the whole operator
/// is a single Toeplitz kernel `k_r = Δ^α [(r+1)^{α+1} − r^{α+1}] / (α+1)`.
pub struct FractionalConvolver {
    alpha: Alpha,
    grid: TimeGrid,
    /// `k_{n−1}, …, k_0`, so that `M_j` is a contiguous dot product.
    reversed: Vec<f64>,
    spectral: Option<Spectral>,
}

impl std::fmt::Debug for FractionalConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FractionalConvolver")
            .field("alpha", &self.alpha)
            .field("grid", &self.grid)
            .field("fft", &self.spectral.is_some())
            .finish()
    }
}

impl FractionalConvolver {
    pub fn new(alpha: Alpha, grid: TimeGrid, method: ConvolutionMethod) -> Self {
        let n = grid.cells();
        let scale = grid.step().powf(alpha.value());
        let kernel: Vec<f64> = (0..n).map(|r| scale * unit_cell_weight(alpha.value(), r)).collect();
        let use_fft = match method {
            ConvolutionMethod::Auto => n > DIRECT_MAX_CELLS,
            ConvolutionMethod::Direct => false,
            ConvolutionMethod::Fft => true,
        };
        let spectral = use_fft.then(|| {
            let len = (2 * n).next_power_of_two();
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(len);
            let inverse = planner.plan_fft_inverse(len);
            let mut spec = vec![Complex::new(0.0, 0.0); len];
            for (s, &k) in spec.iter_mut().zip(&kernel) {
                s.re = k;
            }
            forward.process(&mut spec);
            Spectral {
                len,
                kernel: spec,
                forward,
                inverse,
            }
        });
        let mut reversed = kernel;
        reversed.reverse();
        FractionalConvolver {
            alpha,
            grid,
            reversed,
            spectral,
        }
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn method(&self) -> ConvolutionMethod {
        if self.spectral.is_some() {
            ConvolutionMethod::Fft
        } else {
            ConvolutionMethod::Direct
        }
    }

    /// `k_r`, the weight at lag `r = j − i`.
    pub fn kernel(&self, lag: usize) -> f64 {
        self.reversed[self.reversed.len() - 1 - lag]
    }

    /// Left-point products `ξ_{t_{i−1}} ΔW_i`, checked against the grid.
    fn drive(&self, xi: &SamplePath, dw: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.cells();
        if xi.grid() != &self.grid {
            return Err(Error::GridMismatch(format!(
                "integrand grid {:?} differs from convolution grid {:?}",
                xi.grid(),
                self.grid
            )));
        }
        if dw.len() != n {
            return Err(Error::GridMismatch(format!(
                "{} increments for a grid of {n} cells",
                dw.len()
            )));
        }
        Ok(xi.values()[..n].iter().zip(dw).map(|(x, d)| x * d).collect())
    }

    /// The whole path `M_{t_0}, …, M_{t_n}` with `M_{t_0} = 0`.
    pub fn convolve(&self, xi: &SamplePath, dw: &[f64]) -> Result<SamplePath> {
        let y = self.drive(xi, dw)?;
        let n = self.grid.cells();
        let mut values = vec![0.0; n + 1];
        match &self.spectral {
            None => {
                for j in 1..=n {
                    values[j] = crate::paths::dot_product(&self.reversed[n - j..], &y[..j]);
                }
            }
            Some(sp) => {
                let mut buf = vec![Complex::new(0.0, 0.0); sp.len];
                for (b, &v) in buf.iter_mut().zip(&y) {
                    b.re = v;
                }
                sp.forward.process(&mut buf);
                for (b, k) in buf.iter_mut().zip(&sp.kernel) {
                    *b *= k;
                }
                sp.inverse.process(&mut buf);
                let norm = 1.0 / sp.len as f64;
                for j in 1..=n {
                    values[j] = buf[j - 1].re * norm;
                }
            }
        }
        SamplePath::new(self.grid, values)
    }

    /// `M_{t_n}` alone, in O(n).
    pub fn terminal(&self, xi: &SamplePath, dw: &[f64]) -> Result<f64> {
        let y = self.drive(xi, dw)?;
        Ok(crate::paths::dot_product(&self.reversed, &y))
    }
}

/// One-shot form of [`FractionalConvolver::convolve`].
pub fn frac_convolve(alpha: Alpha, xi: &SamplePath, dw: &[f64]) -> Result<SamplePath> {
    FractionalConvolver::new(alpha, *xi.grid(), ConvolutionMethod::Auto).convolve(xi, dw)
}

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{RandomStream, SamplePath, TimeGrid};
use crate::{Error, Result};

/// Grids at least this fine use circulant embedding when the method is
/// chosen automatically.
pub const CIRCULANT_MIN_CELLS: usize = 1 << 12;

/// Negative circulant eigenvalues smaller than this fraction of the largest
/// one are treated as round-off and clamped to zero.
const EIGEN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FbmMethod {
    /// Cholesky factor of the covariance matrix on the grid points.
    Exact,
    /// Davies–Harte embedding of the stationary increments.
    Circulant,
}

impl FbmMethod {
    pub fn auto(cells: usize) -> Self {
        if cells >= CIRCULANT_MIN_CELLS {
            FbmMethod::Circulant
        } else {
            FbmMethod::Exact
        }
    }
}

/// `R(s, u) = ½(s^{2H} + u^{2H} − |s−u|^{2H})`.
pub fn fbm_covariance(s: f64, u: f64, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (s.powf(h2) + u.powf(h2) - (s - u).abs().powf(h2))
}

/// Autocovariance of unit-spaced fractional Gaussian noise at lag `k`.
fn fgn_autocovariance(k: usize, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Prepared fractional Brownian motion sampler for one grid.
///
/// Construction does the expensive work (factorisation or eigenvalues); the
/// generator is immutable afterwards and can be shared across threads.
pub struct FbmGenerator {
    grid: TimeGrid,
    hurst: f64,
    kind: Kind,
}

enum Kind {
    /// Packed lower-triangular rows of the Cholesky factor of `R(t_i, t_j)`,
    /// `i, j = 1..n`.
    Cholesky(Vec<f64>),
    Circulant {
        /// Scaled square roots of the embedding eigenvalues, length `2n`.
        coefficients: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
        scale: f64,
    },
}

impl std::fmt::Debug for FbmGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FbmGenerator")
            .field("grid", &self.grid)
            .field("hurst", &self.hurst)
            .field("method", &self.method())
            .finish()
    }
}

impl FbmGenerator {
    pub fn new(grid: TimeGrid, hurst: f64, method: FbmMethod) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::constraint(format!(
                "Hurst index must satisfy 0 < H < 1, got {hurst}"
            )));
        }
        let kind = match method {
            FbmMethod::Exact => Kind::Cholesky(cholesky_factor(&grid, hurst)?),
            FbmMethod::Circulant => circulant(&grid, hurst)?,
        };
        Ok(FbmGenerator { grid, hurst, kind })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn method(&self) -> FbmMethod {
        match self.kind {
            Kind::Cholesky(_) => FbmMethod::Exact,
            Kind::Circulant { .. } => FbmMethod::Circulant,
        }
    }

    pub fn sample(&self, stream: &RandomStream) -> SamplePath {
        let n = self.grid.cells();
        let mut values = vec![0.0; n + 1];
        match &self.kind {
            Kind::Cholesky(lower) => {
                let mut z = vec![0.0; n];
                stream.normals().fill(&mut z);
                let mut offset = 0;
                for i in 0..n {
                    let row = &lower[offset..offset + i + 1];
                    values[i + 1] = dot(row, &z[..i + 1]);
                    offset += i + 1;
                }
            }
            Kind::Circulant {
                coefficients,
                fft,
                scale,
            } => {
                let m = coefficients.len();
                let mut normals = stream.normals();
                let mut buf = vec![Complex::new(0.0, 0.0); m];
                buf[0] = Complex::new(coefficients[0] * normals.next().unwrap(), 0.0);
                buf[n] = Complex::new(coefficients[n] * normals.next().unwrap(), 0.0);
                for k in 1..n {
                    let re = normals.next().unwrap();
                    let im = normals.next().unwrap();
                    let w = Complex::new(coefficients[k] * re, coefficients[k] * im);
                    buf[k] = w;
                    buf[m - k] = w.conj();
                }
                fft.process(&mut buf);
                let mut acc = 0.0;
                for i in 0..n {
                    acc += scale * buf[i].re;
                    values[i + 1] = acc;
                }
            }
        }
        SamplePath::new(self.grid, values).expect("length matches grid")
    }
}

/// One-shot convenience wrapper around [`FbmGenerator`].
pub fn fbm_path(grid: &TimeGrid, hurst: f64, stream: &RandomStream, method: FbmMethod) -> Result<SamplePath> {
    Ok(FbmGenerator::new(*grid, hurst, method)?.sample(stream))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn cholesky_factor(grid: &TimeGrid, hurst: f64) -> Result<Vec<f64>> {
    let n = grid.cells();
    let times: Vec<f64> = (1..=n).map(|i| grid.point(i)).collect();
    let mut lower = vec![0.0; n * (n + 1) / 2];
    let row_start = |i: usize| i * (i + 1) / 2;
    for i in 0..n {
        let ri = row_start(i);
        for j in 0..=i {
            let rj = row_start(j);
            let s = fbm_covariance(times[i], times[j], hurst) - dot(&lower[ri..ri + j], &lower[rj..rj + j]);
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Degenerate(format!(
                        "fBm covariance is not positive definite at row {i} (pivot {s:e})"
                    )));
                }
                lower[ri + i] = s.sqrt();
            } else {
                lower[ri + j] = s / lower[rj + j];
            }
        }
    }
    Ok(lower)
}

fn circulant(grid: &TimeGrid, hurst: f64) -> Result<Kind> {
    let n = grid.cells();
    let m = 2 * n;
    let mut row = vec![Complex::new(0.0, 0.0); m];
    for (k, c) in row.iter_mut().take(n + 1).enumerate() {
        c.re = fgn_autocovariance(k, hurst);
    }
    for k in 1..n {
        row[m - k].re = row[k].re;
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);
    let eig: Vec<f64> = row.iter().map(|c| c.re).collect();
    let largest = eig.iter().copied().fold(f64::MIN, f64::max);
    let smallest = eig.iter().copied().fold(f64::MAX, f64::min);
    if smallest < -EIGEN_TOLERANCE * largest {
        return Err(Error::CirculantEmbedding {
            value: smallest,
            largest,
        });
    }
    let mf = m as f64;
    let coefficients = eig
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let l = l.max(0.0);
            if k == 0 || k == n {
                (l / mf).sqrt()
            } else {
                (l / (2.0 * mf)).sqrt()
            }
        })
        .collect();
    Ok(Kind::Circulant {
        coefficients,
        fft,
        scale: grid.step().powf(hurst),
    })
}

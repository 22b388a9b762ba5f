use serde::{Deserialize, Serialize};

use super::inference::{ks_critical_value, ks_distance, ks_null_std_error, TrendReport};
use super::report::{num, CsvRow};
use crate::deterministic::{expected_local_time_bm, gaussian_phi_integral};
use crate::fractional::Alpha;
use crate::parallel;
use crate::paths::{lanes, FbmGenerator, FbmMethod, PhiTag, RandomStream, SamplePath, TimeGrid};
use crate::stats::{self, CompensatedSum, MeanEstimate};
use crate::{Error, Result};

/// Default occupation bandwidth.
pub const DEFAULT_DELTA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeEstimate {
    pub value: f64,
    /// Set when `δ` is below the path's RMS increment, so the grid cannot
    /// resolve the band.
    pub bias_warning: bool,
}

/// `(2δ)^{−1}·|{s : |X_s| ≤ δ}|` from the grid occupation measure, with each
/// cell credited to its left point.
pub fn local_time_estimate(path: &SamplePath, delta: f64) -> Result<LocalTimeEstimate> {
    if !(delta > 0.0) {
        return Err(Error::constraint(format!("bandwidth delta > 0 required, got {delta}")));
    }
    let n = path.grid().cells();
    let v = path.values();
    let inside = v[..n].iter().filter(|x| x.abs() <= delta).count();
    let rms = (v
        .windows(2)
        .map(|w| (w[1] - w[0]).powi(2))
        .collect::<CompensatedSum>()
        .value()
        / n as f64)
        .sqrt();
    Ok(LocalTimeEstimate {
        value: inside as f64 * path.grid().step() / (2.0 * delta),
        bias_warning: delta < rms,
    })
}

fn fbm_unit(hurst: f64, cells: usize) -> Result<FbmGenerator> {
    let grid = TimeGrid::new(1.0, cells)?;
    FbmGenerator::new(grid, hurst, FbmMethod::auto(cells))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeCheck {
    pub hurst: f64,
    pub delta: f64,
    pub cells: usize,
    pub mean: MeanEstimate,
    pub expected: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub warnings: usize,
    /// Means at `δ/2` and `2δ` from the same paths.
    pub sensitivity: [(f64, f64); 2],
    pub pass: bool,
}

/// Mean of [`local_time_estimate`] over `replicates` fBm paths on `[0, 1]`
/// against `E L^H(1, 0)`.
pub fn local_time_check(
    hurst: f64,
    delta: f64,
    cells: usize,
    replicates: usize,
    tolerance: f64,
    seed: u64,
    workers: usize,
) -> Result<LocalTimeCheck> {
    if replicates == 0 {
        return Err(Error::constraint("replicates must be at least 1"));
    }
    let expected = expected_local_time_bm(hurst)?;
    let gen = fbm_unit(hurst, cells)?;
    let widths = [delta, 0.5 * delta, 2.0 * delta];
    let est = parallel::replicate(workers, replicates, |r| {
        let b = gen.sample(&RandomStream::new(seed, r).lane(lanes::REFERENCE));
        widths.map(|d| local_time_estimate(&b, d).expect("positive width"))
    })?;
    let column = |k: usize| est.iter().map(|e| e[k].value).collect::<Vec<f64>>();
    let mean = MeanEstimate::from_samples(&column(0));
    let relative_error = mean.mean / expected - 1.0;
    Ok(LocalTimeCheck {
        hurst,
        delta,
        cells,
        mean,
        expected,
        relative_error,
        tolerance,
        warnings: est.iter().filter(|e| e[0].bias_warning).count(),
        sensitivity: [
            (widths[1], stats::mean(&column(1))),
            (widths[2], stats::mean(&column(2))),
        ],
        pass: relative_error.abs() <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplySetup {
    pub hurst: f64,
    pub alpha: Alpha,
    pub t_values: Vec<f64>,
    pub cells: usize,
    pub replicates: usize,
    pub delta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApplyRow {
    pub t: f64,
    pub ks: f64,
    pub critical: f64,
    pub mean_a: f64,
    pub mean_r: f64,
    pub pass: bool,
}

impl CsvRow for ApplyRow {
    const HEADER: &'static str = "t,ks,critical_1pct,mean_A,mean_R,pass";

    fn row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            num(self.t),
            num(self.ks),
            num(self.critical),
            num(self.mean_a),
            num(self.mean_r),
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplyReport {
    pub hurst: f64,
    pub alpha: f64,
    pub beta: f64,
    pub phi_integral: f64,
    pub delta: f64,
    pub cells: usize,
    pub replicates: usize,
    pub reference_warnings: usize,
    pub rows: Vec<ApplyRow>,
    pub trend: TrendReport,
}

impl ApplyReport {
    /// Decreasing KS distance with the last one inside the 1% critical value.
    pub fn pass(&self) -> bool {
        self.trend.decreasing() && self.rows.last().is_some_and(|r| r.pass)
    }
}

/// Compare `A_t = t^{−(1−H)}∫_0^t |Φ(B^H_s)|^β ds` (`Φ = e^{−z²}`) with the
/// limit `R = (∫|Φ|^β)·L̂^H(1, 0)` by the two-sample KS distance at every t.
///
/// `A_t` reuses the same stream index at every horizon. `R` comes from
/// independent paths on the reference lane and is shared by all horizons.
pub fn verify_apply(setup: &ApplySetup, workers: usize) -> Result<ApplyReport> {
    let ts = &setup.t_values;
    if ts.len() < 2 || !ts.windows(2).all(|w| w[1] > w[0]) || !(ts[0] > 0.0) {
        return Err(Error::constraint(format!(
            "t ladder must hold at least two strictly increasing positive values, got {ts:?}"
        )));
    }
    if setup.replicates == 0 {
        return Err(Error::constraint("replicates must be at least 1"));
    }
    let h = setup.hurst;
    let beta = setup.alpha.beta();
    let phi_integral = gaussian_phi_integral(PhiTag::Gauss, beta)?;
    let reference_gen = fbm_unit(h, setup.cells)?;
    let reference = parallel::replicate(workers, setup.replicates, |r| {
        let b = reference_gen.sample(&RandomStream::new(setup.seed, r).lane(lanes::REFERENCE));
        local_time_estimate(&b, setup.delta)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let reference_warnings = reference.iter().filter(|e| e.bias_warning).count();
    let r_sample: Vec<f64> = reference.iter().map(|e| phi_integral * e.value).collect();
    let critical = ks_critical_value(setup.replicates, setup.replicates, 0.01)?;
    let mut rows = Vec::new();
    for &t in ts {
        let grid = TimeGrid::new(t, setup.cells)?;
        let gen = FbmGenerator::new(grid, h, FbmMethod::auto(setup.cells))?;
        let scale = t.powf(-(1.0 - h)) * grid.step();
        let a_sample = parallel::replicate(workers, setup.replicates, |r| {
            let b = gen.sample(&RandomStream::new(setup.seed, r));
            let occ: CompensatedSum = b.values()[..setup.cells]
                .iter()
                .map(|&z| PhiTag::Gauss.eval(z).powf(beta))
                .collect();
            scale * occ.value()
        })?;
        let ks = ks_distance(&a_sample, &r_sample)?;
        rows.push(ApplyRow {
            t,
            ks,
            critical,
            mean_a: stats::mean(&a_sample),
            mean_r: stats::mean(&r_sample),
            pass: ks <= critical,
        });
    }
    let se = ks_null_std_error(setup.replicates, setup.replicates);
    let trend = TrendReport::new(
        "ks",
        ts.clone(),
        rows.iter().map(|r| r.ks).collect(),
        vec![se; rows.len()],
    )?;
    Ok(ApplyReport {
        hurst: h,
        alpha: setup.alpha.value(),
        beta,
        phi_integral,
        delta: setup.delta,
        cells: setup.cells,
        replicates: setup.replicates,
        reference_warnings,
        rows,
        trend,
    })
}

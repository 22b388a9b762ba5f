use serde::{Deserialize, Serialize};

use super::inference::{wilson, TrendReport};
use super::report::{num, opt_num, CsvRow};
use super::tail::Z95;
use crate::deterministic::WeightedQuadrature;
use crate::fractional::{
    beta_variation, running_sup, Alpha, CAlphaEstimate, CAlphaEstimator, ConvolutionMethod, FractionalConvolver,
};
use crate::parallel;
use crate::paths::{
    bm_increments, lanes, IntegrandKind, IntegrandSampler, IntegrandSpec, RandomStream, SamplePath, TimeGrid,
};
use crate::stats::{self, MeanEstimate};
use crate::{Error, Result};

fn check_ladder(t_values: &[f64]) -> Result<()> {
    if t_values.len() < 2 || !t_values.windows(2).all(|w| w[1] > w[0]) || !(t_values[0] > 0.0) {
        return Err(Error::constraint(format!(
            "t ladder must hold at least two strictly increasing positive values, got {t_values:?}"
        )));
    }
    Ok(())
}

fn check_replicates(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::constraint("replicates must be at least 1"));
    }
    Ok(())
}

/// Sample variance of `M_t` for `ξ ≡ 1` against `t^{2α+1}/(2α+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsometryRow {
    pub alpha: f64,
    pub t: f64,
    pub variance: f64,
    pub std_error: f64,
    pub expected: f64,
    pub z: f64,
    pub pass: bool,
}

impl CsvRow for IsometryRow {
    const HEADER: &'static str = "alpha,t,variance,std_error,expected,z,pass";

    fn row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            num(self.alpha),
            num(self.t),
            num(self.variance),
            num(self.std_error),
            num(self.expected),
            num(self.z),
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Itô-isometry check over every `(α, t)` combination. Each replicate draws
/// one set of standard normals and rescales it to every horizon.
pub fn isometry_suite(
    alphas: &[f64],
    t_values: &[f64],
    cells: usize,
    replicates: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<IsometryRow>> {
    check_replicates(replicates)?;
    let mut combos = Vec::new();
    for &a in alphas {
        for &t in t_values {
            let grid = TimeGrid::new(t, cells)?;
            let alpha = Alpha::new(a)?;
            combos.push((
                alpha,
                grid,
                FractionalConvolver::new(alpha, grid, ConvolutionMethod::Auto),
            ));
        }
    }
    let ones: Vec<SamplePath> = combos
        .iter()
        .map(|(_, g, _)| SamplePath::new(*g, vec![1.0; cells + 1]).expect("length"))
        .collect();
    let terminals = parallel::replicate(workers, replicates, |r| {
        let z: Vec<f64> = RandomStream::new(seed, r).normals().take(cells).collect();
        combos
            .iter()
            .zip(&ones)
            .map(|((_, g, conv), xi)| {
                let s = g.step().sqrt();
                let dw: Vec<f64> = z.iter().map(|v| s * v).collect();
                conv.terminal(xi, &dw).expect("grid matches")
            })
            .collect::<Vec<f64>>()
    })?;
    Ok(combos
        .iter()
        .enumerate()
        .map(|(c, (alpha, g, _))| {
            let xs: Vec<f64> = terminals.iter().map(|row| row[c]).collect();
            let a = alpha.value();
            let t = g.horizon();
            let variance = stats::variance(&xs);
            let std_error = stats::variance_std_error(&xs);
            let expected = t.powf(2.0 * a + 1.0) / (2.0 * a + 1.0);
            let z = (variance - expected) / std_error;
            IsometryRow {
                alpha: a,
                t,
                variance,
                std_error,
                expected,
                z,
                pass: z.abs() <= 3.0,
            }
        })
        .collect())
}

/// Share of paths whose quadratic variation lies within `tolerance` of `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticVariationCheck {
    pub t: f64,
    pub cells: usize,
    pub replicates: usize,
    pub tolerance: f64,
    pub within: usize,
    pub fraction: f64,
}

pub fn quadratic_variation_check(
    t: f64,
    cells: usize,
    replicates: usize,
    tolerance: f64,
    seed: u64,
    workers: usize,
) -> Result<QuadraticVariationCheck> {
    check_replicates(replicates)?;
    let grid = TimeGrid::new(t, cells)?;
    let conv = FractionalConvolver::new(Alpha::new(0.0)?, grid, ConvolutionMethod::Auto);
    let ones = SamplePath::new(grid, vec![1.0; cells + 1])?;
    let hits = parallel::replicate(workers, replicates, |r| {
        let dw = bm_increments(&grid, &RandomStream::new(seed, r));
        let m = conv.convolve(&ones, &dw).expect("grid matches");
        let qv = beta_variation(&m, 2.0, cells).expect("valid");
        (qv / t - 1.0).abs() <= tolerance
    })?;
    let within = hits.iter().filter(|&&h| h).count();
    Ok(QuadraticVariationCheck {
        t,
        cells,
        replicates,
        tolerance,
        within,
        fraction: within as f64 / replicates as f64,
    })
}

/// Mean L¹ distance between `S_{β,m}` and the proxy limit `ĉ_α·t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationGap {
    pub m: usize,
    pub gap: MeanEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationConvergence {
    pub alpha: f64,
    pub cells: usize,
    pub proxy: CAlphaEstimate,
    pub gaps: Vec<VariationGap>,
    pub strictly_decreasing: bool,
}

/// `E|S_{β,m} − ĉ_α t|` along a ladder of subdivisions (`ξ ≡ 1`). The
/// proxy `ĉ_α` is estimated at the finest subdivision from an independent
/// set of paths on the proxy lane.
pub fn variation_convergence(
    alpha: Alpha,
    grid: TimeGrid,
    ladder: &[usize],
    replicates: usize,
    proxy_replicates: usize,
    seed: u64,
    workers: usize,
) -> Result<VariationConvergence> {
    check_replicates(replicates)?;
    let finest = *ladder
        .iter()
        .max()
        .ok_or_else(|| Error::constraint("subdivision ladder is empty"))?;
    let proxy = CAlphaEstimator::new(alpha, grid, proxy_replicates, seed)
        .lane(lanes::PROXY)
        .workers(workers)
        .at(finest)?;
    let rows = CAlphaEstimator::new(alpha, grid, replicates, seed)
        .workers(workers)
        .ladder_samples(ladder)?;
    let target = proxy.value();
    let gaps: Vec<VariationGap> = ladder
        .iter()
        .zip(rows)
        .map(|(&m, values)| {
            let diffs: Vec<f64> = values.iter().map(|v| (v - target).abs() * grid.horizon()).collect();
            VariationGap {
                m,
                gap: MeanEstimate::from_samples(&diffs),
            }
        })
        .collect();
    let strictly_decreasing = gaps.windows(2).all(|w| w[1].gap.mean < w[0].gap.mean);
    Ok(VariationConvergence {
        alpha: alpha.value(),
        cells: grid.cells(),
        proxy,
        gaps,
        strictly_decreasing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WllnRow {
    pub t: f64,
    pub k: usize,
    /// Replicates with a nonzero β-variation.
    pub valid: usize,
    pub degenerate: usize,
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WllnReport {
    pub alpha: f64,
    pub eta: f64,
    pub integrand: String,
    pub cells: usize,
    pub rows: Vec<WllnRow>,
    pub trend: TrendReport,
}

impl WllnReport {
    pub fn pass(&self) -> bool {
        self.trend.decreasing()
    }
}

impl CsvRow for WllnRow {
    const HEADER: &'static str = "t,k,N,degenerate,p_hat,lo,hi,se";

    fn row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            num(self.t),
            self.k,
            self.valid,
            self.degenerate,
            num(self.p_hat),
            num(self.lo),
            num(self.hi),
            num(self.std_error)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WllnSetup {
    pub alpha: Alpha,
    pub eta: f64,
    pub t_values: Vec<f64>,
    pub integrand: IntegrandSpec,
    pub cells: usize,
    pub replicates: usize,
    pub seed: u64,
}

/// `P(sup_{s≤t}|M_s| / S_{β,n} > η)` along the t ladder, with the
/// β-variation taken over every cell of the simulation grid.
pub fn verify_wlln(setup: &WllnSetup, workers: usize) -> Result<WllnReport> {
    check_ladder(&setup.t_values)?;
    check_replicates(setup.replicates)?;
    if !(setup.eta > 0.0) {
        return Err(Error::constraint(format!("eta > 0 required, got {}", setup.eta)));
    }
    if !setup.integrand.sup_bound().is_finite() {
        return Err(Error::constraint("the integrand must be bounded"));
    }
    let beta = setup.alpha.beta();
    let mut rows = Vec::new();
    for &t in &setup.t_values {
        let grid = TimeGrid::new(t, setup.cells)?;
        let sampler = IntegrandSampler::new(&setup.integrand, &grid)?;
        let conv = FractionalConvolver::new(setup.alpha, grid, ConvolutionMethod::Auto);
        let ratios = parallel::replicate(workers, setup.replicates, |r| {
            let stream = RandomStream::new(setup.seed, r);
            let xi = sampler.sample(&stream);
            let m = conv
                .convolve(&xi, &bm_increments(&grid, &stream))
                .expect("grid matches");
            let s = beta_variation(&m, beta, setup.cells).expect("valid");
            (s > 0.0).then(|| running_sup(&m) / s)
        })?;
        let valid = ratios.iter().flatten().count();
        let degenerate = ratios.len() - valid;
        let k = ratios.iter().flatten().filter(|&&q| q > setup.eta).count();
        let (p_hat, lo, hi, se) = if valid == 0 {
            (f64::NAN, 0.0, 1.0, f64::NAN)
        } else {
            let (lo, hi) = wilson(k, valid, Z95);
            (k as f64 / valid as f64, lo, hi, binomial_std_error(k, valid))
        };
        rows.push(WllnRow {
            t,
            k,
            valid,
            degenerate,
            p_hat,
            lo,
            hi,
            std_error: se,
        });
    }
    let trend = TrendReport::new(
        "p_hat",
        setup.t_values.clone(),
        rows.iter().map(|r| r.p_hat).collect(),
        rows.iter().map(|r| r.std_error).collect(),
    )?;
    Ok(WllnReport {
        alpha: setup.alpha.value(),
        eta: setup.eta,
        integrand: setup.integrand.label(),
        cells: setup.cells,
        rows,
        trend,
    })
}

/// Binomial standard error, kept positive at `k = 0` and `k = N` by using
/// `(k+1)/(N+2)` in place of `k/N`.
fn binomial_std_error(k: usize, n: usize) -> f64 {
    let p = (k as f64 + 1.0) / (n as f64 + 2.0);
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conv00Row {
    pub t: f64,
    pub median: f64,
    pub median_se: f64,
    pub q90: f64,
    pub q90_se: f64,
    pub sd: f64,
    /// `√(2α+1)·t^{−(α+½)}/|c|` when `ξ ≡ c`.
    pub sd_theory: Option<f64>,
}

impl CsvRow for Conv00Row {
    const HEADER: &'static str = "t,median,median_se,q90,q90_se,sd,sd_theory";

    fn row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            num(self.t),
            num(self.median),
            num(self.median_se),
            num(self.q90),
            num(self.q90_se),
            num(self.sd),
            opt_num(self.sd_theory)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv00Report {
    pub alpha: f64,
    pub integrand: String,
    pub cells: usize,
    pub rows: Vec<Conv00Row>,
    pub median_trend: TrendReport,
    pub q90_trend: TrendReport,
}

impl Conv00Report {
    pub fn pass(&self) -> bool {
        self.median_trend.decreasing() && self.q90_trend.decreasing()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv00Setup {
    pub alpha: Alpha,
    pub integrand: IntegrandSpec,
    pub t_values: Vec<f64>,
    pub cells: usize,
    pub replicates: usize,
    pub seed: u64,
}

/// `∫(t−s)^α ξ dW / ∫(t−s)^{2α} ξ² ds` per path along the t ladder.
pub fn verify_conv00(setup: &Conv00Setup, workers: usize) -> Result<Conv00Report> {
    check_ladder(&setup.t_values)?;
    check_replicates(setup.replicates)?;
    let a = setup.alpha.value();
    if !(a > 0.0) {
        return Err(Error::constraint(format!("conv00 requires alpha > 0, got {a}")));
    }
    let constant = match setup.integrand.kind {
        IntegrandKind::Constant { value } => Some(value),
        _ => None,
    };
    let mut rows = Vec::new();
    for &t in &setup.t_values {
        let grid = TimeGrid::new(t, setup.cells)?;
        let sampler = IntegrandSampler::new(&setup.integrand, &grid)?;
        let conv = FractionalConvolver::new(setup.alpha, grid, ConvolutionMethod::Auto);
        let quad = WeightedQuadrature::new(2.0 * a, &grid)?;
        let ratios = parallel::replicate(workers, setup.replicates, |r| {
            let stream = RandomStream::new(setup.seed, r);
            let xi = sampler.sample(&stream);
            let num = conv
                .terminal(&xi, &bm_increments(&grid, &stream))
                .expect("grid matches");
            let sq: Vec<f64> = xi.values().iter().map(|x| x * x).collect();
            let den = quad.apply(&sq).expect("grid matches");
            assert!(
                den > 0.0,
                "denominator vanished for integrand {}",
                setup.integrand.label()
            );
            num / den
        })?;
        let abs: Vec<f64> = ratios.iter().map(|r| r.abs()).collect();
        let sorted = stats::sorted(&abs);
        rows.push(Conv00Row {
            t,
            median: stats::quantile_sorted(&sorted, 0.5),
            median_se: stats::quantile_std_error_sorted(&sorted, 0.5),
            q90: stats::quantile_sorted(&sorted, 0.9),
            q90_se: stats::quantile_std_error_sorted(&sorted, 0.9),
            sd: stats::variance(&ratios).sqrt(),
            sd_theory: constant.map(|c| (2.0 * a + 1.0).sqrt() * t.powf(-(a + 0.5)) / c.abs()),
        });
    }
    let ts = setup.t_values.clone();
    let median_trend = TrendReport::new(
        "median |ratio|",
        ts.clone(),
        rows.iter().map(|r| r.median).collect(),
        rows.iter().map(|r| r.median_se).collect(),
    )?;
    let q90_trend = TrendReport::new(
        "q90 |ratio|",
        ts,
        rows.iter().map(|r| r.q90).collect(),
        rows.iter().map(|r| r.q90_se).collect(),
    )?;
    Ok(Conv00Report {
        alpha: a,
        integrand: setup.integrand.label(),
        cells: setup.cells,
        rows,
        median_trend,
        q90_trend,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::PhiTag;

    #[test]
    fn isometry_small() {
        let rows = isometry_suite(&[-0.25, 0.25], &[1.0, 4.0], 512, 20_000, 3, 1).unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn quadratic_variation_concentrates() {
        let qv = quadratic_variation_check(4.0, 1 << 14, 200, 0.05, 1, 1).unwrap();
        assert!(qv.fraction >= 0.99, "{qv:?}");
    }

    #[test]
    fn wlln_constant_alpha_zero() {
        let setup = WllnSetup {
            alpha: Alpha::new(0.0).unwrap(),
            eta: 0.5,
            t_values: vec![10.0, 40.0, 160.0],
            integrand: IntegrandSpec::constant(1.0),
            cells: 1 << 10,
            replicates: 2000,
            seed: 5,
        };
        let rep = verify_wlln(&setup, 1).unwrap();
        assert!(rep.pass(), "{rep:?}");
        assert!(rep.rows.iter().all(|r| r.degenerate == 0));
        // sup|W| / QV ≈ sup_{[0,1]}|W| / √t.
        let p10 = crate::experiments::inference::bm_sup_tail(0.5 * 10f64.sqrt(), 1.0);
        assert!((rep.rows[0].p_hat - p10).abs() < 0.05, "{} vs {p10}", rep.rows[0].p_hat);
        let never = verify_wlln(&WllnSetup { eta: 1e9, ..setup }, 1).unwrap();
        assert!(never.rows.iter().all(|r| r.p_hat == 0.0));
    }

    #[test]
    fn wlln_rejects_bad_input() {
        let setup = WllnSetup {
            alpha: Alpha::new(0.0).unwrap(),
            eta: 0.5,
            t_values: vec![10.0, 5.0],
            integrand: IntegrandSpec::constant(1.0),
            cells: 64,
            replicates: 10,
            seed: 5,
        };
        assert!(verify_wlln(&setup, 1).is_err());
        assert!(verify_wlln(
            &WllnSetup {
                t_values: vec![1.0, 2.0],
                eta: 0.0,
                ..setup
            },
            1
        )
        .is_err());
    }

    #[test]
    fn conv00_scaling() {
        let setup = Conv00Setup {
            alpha: Alpha::new(0.25).unwrap(),
            integrand: IntegrandSpec::constant(1.0),
            t_values: vec![10.0, 100.0, 1000.0],
            cells: 1 << 12,
            replicates: 4000,
            seed: 8,
        };
        let rep = verify_conv00(&setup, 1).unwrap();
        assert!(rep.pass(), "{rep:?}");
        let r100 = &rep.rows[1];
        assert!((r100.sd_theory.unwrap() - 0.0387).abs() < 1e-4);
        for r in &rep.rows {
            assert!((r.sd / r.sd_theory.unwrap() - 1.0).abs() < 0.1, "{r:?}");
        }
        assert!(rep.rows[2].q90 <= 0.2 * rep.rows[0].q90);
    }

    #[test]
    fn conv00_fbm_integrand() {
        let setup = Conv00Setup {
            alpha: Alpha::new(0.25).unwrap(),
            integrand: IntegrandSpec::phi_of_fbm(0.75, PhiTag::ShiftedGauss),
            t_values: vec![10.0, 100.0, 1000.0],
            cells: 1 << 10,
            replicates: 500,
            seed: 8,
        };
        let rep = verify_conv00(&setup, 1).unwrap();
        assert!(rep.pass(), "{rep:?}");
        assert!(rep.rows.iter().all(|r| r.sd_theory.is_none()));
        assert!(verify_conv00(
            &Conv00Setup {
                alpha: Alpha::new(0.0).unwrap(),
                ..setup
            },
            1
        )
        .is_err());
    }

    #[test]
    fn variation_gaps_shrink() {
        let g = TimeGrid::new(1.0, 1 << 14).unwrap();
        let rep =
            variation_convergence(Alpha::new(0.25).unwrap(), g, &[1 << 8, 1 << 10, 1 << 12], 50, 50, 2, 1).unwrap();
        assert!(rep.strictly_decreasing, "{rep:?}");
    }
}

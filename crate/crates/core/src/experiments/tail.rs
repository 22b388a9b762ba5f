use serde::{Deserialize, Serialize};

use super::inference::wilson;
use super::report::{num, opt_num, CsvRow};
use crate::bounds::{self, BoundSpec, BoundValue, Case, FixedTimeVariant};
use crate::fractional::{running_sup, Alpha, ConvolutionMethod, FractionalConvolver};
use crate::parallel;
use crate::paths::{bm_increments, lanes, IntegrandSampler, IntegrandSpec, RandomStream, SamplePath, TimeGrid};
use crate::stats::{self, CompensatedSum};
use crate::{Error, Result};

/// Two-sided 95% normal quantile used for every tail interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Default pilot size for choosing `ν_t`.
pub const DEFAULT_PILOT: usize = 1000;

/// Empirical exceedance probability of one inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub case: String,
    pub alpha: f64,
    pub beta_prime: Option<f64>,
    pub eps: Option<f64>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub t: f64,
    pub nu_t: Option<f64>,
    pub threshold: f64,
    /// Raw probability bound (may exceed 1).
    pub bound: f64,
    /// Replicates in the joint deviation-and-conditioning event.
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
    /// Fraction of replicates satisfying the conditioning event.
    pub event_freq: f64,
    /// Replicates exceeding the threshold regardless of the event.
    pub exceed_any: usize,
    pub pass: bool,
}

impl TailEstimate {
    #[allow(clippy::too_many_arguments)]
    fn build(
        case: String,
        alpha: f64,
        beta_prime: Option<f64>,
        eps: Option<f64>,
        l: Option<f64>,
        t: f64,
        nu_t: Option<f64>,
        threshold: f64,
        bound: f64,
        k: usize,
        n: usize,
        events: usize,
        exceed_any: usize,
    ) -> Self {
        let (lo, hi) = wilson(k, n, Z95);
        TailEstimate {
            case,
            alpha,
            beta_prime,
            eps,
            l,
            t,
            nu_t,
            threshold,
            bound,
            k,
            n,
            p_hat: k as f64 / n as f64,
            lo,
            hi,
            event_freq: events as f64 / n as f64,
            exceed_any,
            pass: lo <= bound,
        }
    }
}

impl CsvRow for TailEstimate {
    const HEADER: &'static str = "case,alpha,beta_prime,eps,L,t,nu_t,threshold,bound,k,N,p_hat,lo,hi,event_freq,pass";

    fn row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.case,
            num(self.alpha),
            opt_num(self.beta_prime),
            opt_num(self.eps),
            opt_num(self.l),
            num(self.t),
            opt_num(self.nu_t),
            num(self.threshold),
            num(self.bound),
            self.k,
            self.n,
            num(self.p_hat),
            num(self.lo),
            num(self.hi),
            num(self.event_freq),
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Simulation settings shared by every inequality checked against the same
/// set of paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSetup {
    pub alpha: Alpha,
    pub t: f64,
    pub cells: usize,
    pub integrand: IntegrandSpec,
    pub replicates: usize,
    pub pilot: usize,
    pub seed: u64,
    #[serde(default)]
    pub method: ConvolutionMethod,
}

impl TailSetup {
    pub fn new(alpha: Alpha, t: f64, integrand: IntegrandSpec, replicates: usize, seed: u64) -> Self {
        TailSetup {
            alpha,
            t,
            cells: 1 << 12,
            integrand,
            replicates,
            pilot: DEFAULT_PILOT,
            seed,
            method: ConvolutionMethod::Auto,
        }
    }

    pub fn cells(mut self, cells: usize) -> Self {
        self.cells = cells;
        self
    }

    pub fn pilot(mut self, pilot: usize) -> Self {
        self.pilot = pilot;
        self
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t, self.cells)
    }

    fn check(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::constraint("replicates must be at least 1"));
        }
        Ok(())
    }
}

/// `(Σ |ξ_{t_{i−1}}|^q Δ)^{2/q}`, the conditioning statistic with `q = 2`
/// for `∫ξ²` and `q = β′` for `(∫|ξ|^{β′})^{2/β′}`.
pub fn conditioning_statistic(xi: &SamplePath, q: f64) -> f64 {
    let n = xi.grid().cells();
    let dt = xi.grid().step();
    let s: f64 = xi.values()[..n]
        .iter()
        .map(|x| if q == 2.0 { x * x } else { x.abs().powf(q) })
        .collect::<CompensatedSum>()
        .value()
        * dt;
    if q == 2.0 {
        s
    } else {
        s.powf(2.0 / q)
    }
}

/// Median of the conditioning statistic over `setup.pilot` integrand draws
/// on the pilot lane.
pub fn pilot_nu(setup: &TailSetup, q: f64, workers: usize) -> Result<f64> {
    if setup.pilot == 0 {
        return Err(Error::constraint(
            "pilot size must be at least 1 when nu_t is not given",
        ));
    }
    let grid = setup.grid()?;
    let sampler = IntegrandSampler::new(&setup.integrand, &grid)?;
    let stat = parallel::replicate(workers, setup.pilot, |i| {
        let s = RandomStream::new(setup.seed, i).lane(lanes::PILOT);
        conditioning_statistic(&sampler.sample_on(&s), q)
    })?;
    let sorted = stats::sorted(&stat);
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

struct PathStats {
    sup: f64,
    conditioning: Vec<f64>,
}

fn exponent_key(q: f64) -> u64 {
    q.to_bits()
}

/// Check several Theorem-type inequalities against one set of simulated
/// paths. Every inequality must share `setup.alpha` and `setup.t`. When
/// `nu` is `None`, `ν_t` is the pilot median of each case's conditioning
/// statistic.
pub fn verify_bounds(
    setup: &TailSetup,
    cells: &[(Case, f64)],
    nu: Option<f64>,
    workers: usize,
) -> Result<Vec<TailEstimate>> {
    setup.check()?;
    let grid = setup.grid()?;
    let sampler = IntegrandSampler::new(&setup.integrand, &grid)?;
    for (case, _) in cells {
        if let Case::Iii { c_inf, .. } = case {
            let sup = setup.integrand.sup_bound();
            if sup > *c_inf {
                return Err(Error::constraint(format!(
                    "case iii requires |xi| <= c_inf = {c_inf}, integrand {} has bound {sup}",
                    setup.integrand.label()
                )));
            }
        }
    }
    let mut exponents: Vec<f64> = Vec::new();
    for (case, _) in cells {
        if let Some(q) = case.conditioning_exponent() {
            if !exponents.iter().any(|&e| exponent_key(e) == exponent_key(q)) {
                exponents.push(q);
            }
        }
    }
    let mut nus = Vec::with_capacity(exponents.len());
    for &q in &exponents {
        nus.push(match nu {
            Some(v) => v,
            None => pilot_nu(setup, q, workers)?,
        });
    }
    let mut evaluated = Vec::with_capacity(cells.len());
    for &(case, l) in cells {
        let idx = case.conditioning_exponent().map(|q| {
            exponents
                .iter()
                .position(|&e| exponent_key(e) == exponent_key(q))
                .unwrap()
        });
        let nu_c = idx.map(|i| nus[i]).unwrap_or(0.0);
        let spec = BoundSpec::new(setup.alpha, case, l, setup.t, nu_c)?;
        evaluated.push((spec, bounds::bound(&spec)?, idx));
    }

    let conv = FractionalConvolver::new(setup.alpha, grid, setup.method);
    let samples = parallel::replicate(workers, setup.replicates, |r| {
        let stream = RandomStream::new(setup.seed, r);
        let xi = sampler.sample(&stream);
        let dw = bm_increments(&grid, &stream);
        let m = conv.convolve(&xi, &dw).expect("grid matches");
        PathStats {
            sup: running_sup(&m),
            conditioning: exponents.iter().map(|&q| conditioning_statistic(&xi, q)).collect(),
        }
    })?;

    Ok(evaluated
        .into_iter()
        .map(|(spec, value, idx)| tally(setup, &spec, &value, idx, &nus, &samples))
        .collect())
}

fn tally(
    setup: &TailSetup,
    spec: &BoundSpec,
    value: &BoundValue,
    idx: Option<usize>,
    nus: &[f64],
    samples: &[PathStats],
) -> TailEstimate {
    let mut k = 0;
    let mut events = 0;
    let mut any = 0;
    for s in samples {
        let event = idx.is_none_or(|i| s.conditioning[i] <= nus[i]);
        let exceed = s.sup >= value.threshold;
        events += event as usize;
        any += exceed as usize;
        k += (event && exceed) as usize;
    }
    TailEstimate::build(
        spec.case.name().to_string(),
        setup.alpha.value(),
        spec.case.beta_prime(),
        spec.case.eps(),
        Some(spec.l),
        spec.t,
        idx.map(|i| nus[i]),
        value.threshold,
        value.probability_bound,
        k,
        samples.len(),
        events,
        any,
    )
}

/// Single-inequality form of [`verify_bounds`].
pub fn verify_bound(setup: &TailSetup, case: Case, l: f64, nu: Option<f64>, workers: usize) -> Result<TailEstimate> {
    Ok(verify_bounds(setup, &[(case, l)], nu, workers)?.remove(0))
}

/// Deviation level of a fixed-time check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedTimeLevel {
    /// Explicit `u`.
    U(f64),
    /// `u` chosen so that the bound equals this value.
    Target(f64),
}

/// `P(|M_t| ≥ u, event)` against the fixed-time bound, with `M_t` taken at
/// the terminal grid point only.
pub fn verify_fixed_time(
    setup: &TailSetup,
    variant: FixedTimeVariant,
    level: FixedTimeLevel,
    nu: Option<f64>,
    workers: usize,
) -> Result<TailEstimate> {
    setup.check()?;
    let grid = setup.grid()?;
    let q = variant.conditioning_exponent();
    let nu = match nu {
        Some(v) => v,
        None => pilot_nu(setup, q, workers)?,
    };
    let u = match level {
        FixedTimeLevel::U(u) => u,
        FixedTimeLevel::Target(b) => bounds::fixed_time_level(setup.alpha, b, setup.t, nu, variant)?,
    };
    let bound = bounds::bound_fixed_time(setup.alpha, u, setup.t, nu, variant)?;
    let sampler = IntegrandSampler::new(&setup.integrand, &grid)?;
    let conv = FractionalConvolver::new(setup.alpha, grid, setup.method);
    let samples = parallel::replicate(workers, setup.replicates, |r| {
        let stream = RandomStream::new(setup.seed, r);
        let xi = sampler.sample(&stream);
        let dw = bm_increments(&grid, &stream);
        let m = conv.terminal(&xi, &dw).expect("grid matches");
        (m.abs() >= u, conditioning_statistic(&xi, q) <= nu)
    })?;
    let (mut k, mut events, mut any) = (0, 0, 0);
    for &(exceed, event) in &samples {
        events += event as usize;
        any += exceed as usize;
        k += (exceed && event) as usize;
    }
    Ok(TailEstimate::build(
        format!("fixed-{}", variant.name()),
        setup.alpha.value(),
        match variant {
            FixedTimeVariant::Remark { beta_prime } => Some(beta_prime),
            FixedTimeVariant::Intro => None,
        },
        None,
        None,
        setup.t,
        Some(nu),
        u,
        bound,
        k,
        samples.len(),
        events,
        any,
    ))
}

/// `P(sup_{s≤t}|W_s| ≥ a·t)` for Brownian motion against `2exp(−a²t/2)`,
/// one estimate per level in `a_values` from shared paths.
pub fn verify_classical(
    a_values: &[f64],
    t: f64,
    cells: usize,
    replicates: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<TailEstimate>> {
    if replicates == 0 {
        return Err(Error::constraint("replicates must be at least 1"));
    }
    let grid = TimeGrid::new(t, cells)?;
    let bounds_: Vec<f64> = a_values
        .iter()
        .map(|&a| bounds::bound_classical(a, t, 1.0))
        .collect::<Result<_>>()?;
    let sups = parallel::replicate(workers, replicates, |r| {
        let dw = bm_increments(&grid, &RandomStream::new(seed, r));
        running_sup(&SamplePath::from_increments(grid, &dw).expect("length matches"))
    })?;
    Ok(a_values
        .iter()
        .zip(bounds_)
        .map(|(&a, b)| {
            let k = sups.iter().filter(|&&s| s >= a * t).count();
            TailEstimate::build(
                "classical".into(),
                0.0,
                None,
                None,
                None,
                t,
                None,
                a * t,
                b,
                k,
                replicates,
                replicates,
                k,
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::inference::bm_sup_tail;

    #[test]
    fn case_iii_threshold_unreachable() {
        let setup = TailSetup::new(Alpha::new(0.0).unwrap(), 1.0, IntegrandSpec::constant(1.0), 10_000, 7).cells(256);
        let est = verify_bound(&setup, Case::Iii { eps: 0.25, c_inf: 1.0 }, 1.0, None, 1).unwrap();
        assert_eq!(est.k, 0);
        assert!(est.pass);
        assert!((est.threshold - 641.7).abs() < 0.1);
        assert_eq!(est.event_freq, 1.0);
        assert!(est.nu_t.is_none());
    }

    #[test]
    fn empty_event_is_trivial_pass() {
        let setup = TailSetup::new(Alpha::new(-0.25).unwrap(), 1.0, IntegrandSpec::constant(1.0), 200, 7).cells(128);
        let est = verify_bound(&setup, Case::I { beta_prime: 6.0 }, 1.0, Some(0.0), 1).unwrap();
        assert_eq!(est.k, 0);
        assert_eq!(est.event_freq, 0.0);
        assert!(est.pass);
    }

    #[test]
    fn pilot_is_deterministic_for_constant_integrand() {
        let setup = TailSetup::new(Alpha::new(-0.25).unwrap(), 4.0, IntegrandSpec::constant(1.0), 10, 1).cells(64);
        let nu = pilot_nu(&setup, 6.0, 1).unwrap();
        assert!((nu - 4f64.powf(1.0 / 3.0)).abs() < 1e-12);
        let nu2 = pilot_nu(&setup, 2.0, 1).unwrap();
        assert!((nu2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn case_iii_rejects_unbounded_integrand() {
        let setup = TailSetup::new(Alpha::new(0.0).unwrap(), 1.0, IntegrandSpec::constant(3.0), 10, 7).cells(64);
        assert!(verify_bound(&setup, Case::Iii { eps: 0.25, c_inf: 1.0 }, 1.0, None, 1).is_err());
        let zero = TailSetup { replicates: 0, ..setup };
        assert!(verify_bound(&zero, Case::Iii { eps: 0.25, c_inf: 5.0 }, 1.0, None, 1).is_err());
    }

    #[test]
    fn joint_event_never_exceeds_marginal() {
        // A small threshold, so exceedances actually occur.
        let setup = TailSetup::new(
            Alpha::new(0.25).unwrap(),
            1.0,
            IntegrandSpec::phi_of_fbm(0.75, crate::paths::PhiTag::ShiftedGauss),
            2000,
            3,
        )
        .cells(128);
        let grid = setup.grid().unwrap();
        let sampler = IntegrandSampler::new(&setup.integrand, &grid).unwrap();
        let conv = FractionalConvolver::new(setup.alpha, grid, ConvolutionMethod::Auto);
        let nu = pilot_nu(&setup, 2.0, 1).unwrap();
        let (mut joint, mut any) = (0, 0);
        for r in 0..setup.replicates as u64 {
            let s = RandomStream::new(setup.seed, r);
            let xi = sampler.sample(&s);
            let m = conv.convolve(&xi, &bm_increments(&grid, &s)).unwrap();
            let exceed = running_sup(&m) >= 2.0;
            any += exceed as usize;
            joint += (exceed && conditioning_statistic(&xi, 2.0) <= nu) as usize;
        }
        assert!(joint <= any && any > 0 && joint > 0, "{joint} {any}");
        let est = verify_bound(&setup, Case::Ii { eps: 0.1 }, 1.0, None, 1).unwrap();
        assert!(est.k <= est.exceed_any);
        assert!((est.event_freq - 0.5).abs() < 0.05, "{}", est.event_freq);
    }

    #[test]
    fn classical_baseline() {
        let est = verify_classical(&[2.0], 1.0, 1 << 10, 100_000, 11, 1)
            .unwrap()
            .remove(0);
        assert!(est.pass);
        assert!((est.bound - 0.270_670_566).abs() < 1e-8);
        // The grid maximum misses excursions between points, which shifts the
        // effective barrier up by about 0.5826·√Δ.
        let exact = bm_sup_tail(2.0, 1.0);
        let shifted = bm_sup_tail(2.0 + 0.5826 / 32.0, 1.0);
        let se = (exact * (1.0 - exact) / est.n as f64).sqrt();
        assert!(
            est.p_hat <= exact + 3.0 * se && est.p_hat >= shifted - 3.0 * se,
            "{} vs {exact}",
            est.p_hat
        );
    }

    #[test]
    fn fixed_time_targets() {
        let setup =
            TailSetup::new(Alpha::new(-0.25).unwrap(), 1.0, IntegrandSpec::constant(1.0), 20_000, 9).cells(1024);
        let est = verify_fixed_time(&setup, FixedTimeVariant::Intro, FixedTimeLevel::Target(0.1), None, 1).unwrap();
        assert!((est.threshold.powi(2) - 4.0 * 20f64.ln()).abs() < 1e-9);
        assert!(est.hi <= 0.1 && est.pass);
        // |M_1| ~ N(0, 2): P(|M_1| ≥ √(4 ln 20)) ≈ 0.0144.
        assert!((est.p_hat - 0.0144).abs() < 0.004, "{}", est.p_hat);
        let tiny = verify_fixed_time(&setup, FixedTimeVariant::Intro, FixedTimeLevel::U(1e-6), None, 1).unwrap();
        assert!(tiny.bound > 1.99 && tiny.pass);
        let remark = verify_fixed_time(
            &setup,
            FixedTimeVariant::Remark { beta_prime: 6.0 },
            FixedTimeLevel::U(3.0),
            None,
            1,
        )
        .unwrap();
        let intro = verify_fixed_time(&setup, FixedTimeVariant::Intro, FixedTimeLevel::U(3.0), None, 1).unwrap();
        assert!(remark.bound > intro.bound && remark.pass);
        assert!(verify_fixed_time(
            &TailSetup {
                alpha: Alpha::new(0.1).unwrap(),
                ..setup
            },
            FixedTimeVariant::Intro,
            FixedTimeLevel::U(1.0),
            None,
            1
        )
        .is_err());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let setup = TailSetup::new(
            Alpha::new(-0.25).unwrap(),
            4.0,
            IntegrandSpec::phi_of_fbm(0.75, crate::paths::PhiTag::ShiftedGauss),
            300,
            5,
        )
        .cells(256)
        .pilot(100);
        let cells = [
            (Case::I { beta_prime: 6.0 }, 1.0),
            (Case::Iii { eps: 0.125, c_inf: 2.0 }, 2.0),
        ];
        let one = verify_bounds(&setup, &cells, None, 1).unwrap();
        let four = verify_bounds(&setup, &cells, None, 4).unwrap();
        assert_eq!(one, four);
    }
}

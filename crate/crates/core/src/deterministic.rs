//! Deterministic numerics: product integration against `(t−s)^p`, the
//! fractional Toeplitz ratio and closed-form oracles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fractional::unit_cell_weight;
use crate::paths::{PhiTag, TimeGrid};
use crate::stats::CompensatedSum;
use crate::{Error, Result};

/// Product-integration rule for `∫_0^t (t−s)^p f(s) ds` with `f` frozen at
/// the left end of every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedQuadrature {
    grid: TimeGrid,
    p: f64,
    /// `Ω_i = [(t−s_{i−1})^{p+1} − (t−s_i)^{p+1}] / (p+1)`, `i = 1..n`.
    weights: Vec<f64>,
}

impl WeightedQuadrature {
    pub fn new(p: f64, grid: &TimeGrid) -> Result<Self> {
        if !(p > -1.0) || !p.is_finite() {
            return Err(Error::constraint(format!("kernel exponent p > -1 required, got {p}")));
        }
        let n = grid.cells();
        let scale = grid.step().powf(p + 1.0);
        let weights = (1..=n).map(|i| scale * unit_cell_weight(p, n - i)).collect();
        Ok(WeightedQuadrature {
            grid: *grid,
            p,
            weights,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ Ω_i`, which telescopes to `t^{p+1}/(p+1)`.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().copied().collect::<CompensatedSum>().value()
    }

    /// `Σ Ω_i f(s_{i−1})`. `f` holds either the `n` left endpoints or all
    /// `n + 1` grid values, in which case the last one is unused.
    pub fn apply(&self, f: &[f64]) -> Result<f64> {
        let n = self.grid.cells();
        if f.len() != n && f.len() != n + 1 {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {n} cells",
                f.len()
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(f)
            .map(|(w, v)| w * v)
            .collect::<CompensatedSum>()
            .value())
    }
}

/// `∫_0^t (t−s)^p f(s) ds` by product integration on `grid`.
pub fn singular_integral(p: f64, f: &[f64], grid: &TimeGrid) -> Result<f64> {
    WeightedQuadrature::new(p, grid)?.apply(f)
}

/// Left-Riemann running integral `G(s_i) = Σ_{k<i} γ(s_k) Δ`, `i = 0..n`.
pub fn cumulative_integral(gamma: &[f64], grid: &TimeGrid) -> Vec<f64> {
    let dt = grid.step();
    let mut acc = CompensatedSum::new();
    let mut out = Vec::with_capacity(grid.cells() + 1);
    out.push(0.0);
    for &g in gamma.iter().take(grid.cells()) {
        acc.add(g * dt);
        out.push(acc.value());
    }
    out
}

/// Fractional Toeplitz ratio
/// `∫(t−s)^{α−1} G(s) x(s) ds / ∫(t−s)^{α−1} G(s) ds`, `G(s) = ∫_0^s γ`.
///
/// `x` and `gamma` are sampled at the grid points (at least the `n` left
/// endpoints).
pub fn toeplitz_ratio(alpha: f64, x: &[f64], gamma: &[f64], grid: &TimeGrid) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::constraint(format!(
            "toeplitz ratio requires alpha > 0, got {alpha}"
        )));
    }
    let n = grid.cells();
    for (name, v) in [("x", x), ("gamma", gamma)] {
        if v.len() < n {
            return Err(Error::GridMismatch(format!(
                "{name} has {} samples for a grid of {n} cells",
                v.len()
            )));
        }
    }
    if let Some(g) = gamma.iter().take(n).find(|g| !(**g >= 0.0)) {
        return Err(Error::constraint(format!("gamma must be nonnegative, found {g}")));
    }
    let q = WeightedQuadrature::new(alpha - 1.0, grid)?;
    let big_g = cumulative_integral(gamma, grid);
    let gx: Vec<f64> = big_g[..n].iter().zip(x).map(|(g, x)| g * x).collect();
    let den = q.apply(&big_g[..n])?;
    if !(den > 0.0) {
        return Err(Error::Degenerate(
            "toeplitz denominator is zero (gamma vanishes on the grid)".into(),
        ));
    }
    Ok(q.apply(&gx)? / den)
}

/// [`toeplitz_ratio`] for functions of time, sampled on `grid`.
pub fn toeplitz_ratio_fn(
    alpha: f64,
    x: impl Fn(f64) -> f64,
    gamma: impl Fn(f64) -> f64,
    grid: &TimeGrid,
) -> Result<f64> {
    let xs: Vec<f64> = grid.points().map(&x).collect();
    let gs: Vec<f64> = grid.points().map(&gamma).collect();
    toeplitz_ratio(alpha, &xs, &gs, grid)
}

/// `∫_R |Φ(z)|^β dz` in closed form.
///
/// Only integrable tags have a value: for a `Φ` with a nonzero limit at
/// infinity the integral diverges and an error is returned.
pub fn gaussian_phi_integral(phi: PhiTag, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::constraint(format!("beta > 0 required, got {beta}")));
    }
    match phi {
        PhiTag::Gauss => Ok((PI / beta).sqrt()),
        other => Err(Error::Degenerate(format!(
            "integral of |{}|^beta over R diverges (|phi| -> {} at infinity)",
            other.name(),
            other.limit_at_infinity()
        ))),
    }
}

/// `E[L^H(1, 0)] = (2π)^{−1/2} / (1 − H)` for fractional Brownian motion.
pub fn expected_local_time_bm(hurst: f64) -> Result<f64> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::constraint(format!("0 < H < 1 required, got {hurst}")));
    }
    Ok((2.0 * PI).sqrt().recip() / (1.0 - hurst))
}

/// Ratio and its distance to the limit at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzRow {
    pub t: f64,
    pub ratio: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzLadder {
    pub alpha: f64,
    pub function: String,
    pub limit: f64,
    pub rows: Vec<ToeplitzRow>,
    /// Errors strictly decrease along the ladder.
    pub monotone: bool,
}

/// Named test function with its limit at infinity.
pub type TestFunction = (&'static str, fn(f64) -> f64, f64);

/// Built-in test functions `x` for the Toeplitz ratio.
pub fn toeplitz_test_functions() -> [TestFunction; 2] {
    fn rising(s: f64) -> f64 {
        s / (1.0 + s)
    }
    fn falling(s: f64) -> f64 {
        1.0 + (-s).exp()
    }
    [("s/(1+s)", rising, 1.0), ("1+exp(-s)", falling, 1.0)]
}

/// [`toeplitz_ratio_fn`] with `γ ≡ 1` along a t ladder, using `per_unit`
/// cells per unit time.
pub fn toeplitz_ladder(
    alpha: f64,
    function: &str,
    x: impl Fn(f64) -> f64,
    limit: f64,
    t_values: &[f64],
    per_unit: f64,
) -> Result<ToeplitzLadder> {
    if !(per_unit > 0.0) {
        return Err(Error::constraint(format!(
            "cells per unit time must be positive, got {per_unit}"
        )));
    }
    let mut rows = Vec::with_capacity(t_values.len());
    for &t in t_values {
        let cells = ((per_unit * t).round() as usize).max(1);
        let grid = TimeGrid::new(t, cells)?;
        let ratio = toeplitz_ratio_fn(alpha, &x, |_| 1.0, &grid)?;
        rows.push(ToeplitzRow {
            t,
            ratio,
            error: (ratio - limit).abs(),
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].error < w[0].error);
    Ok(ToeplitzLadder {
        alpha,
        function: function.to_string(),
        limit,
        rows,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn telescoping_weight_sum() {
        for &p in &[-0.7, -0.5, -0.2, 0.0, 0.5, 0.9] {
            for &(t, n) in &[(1.0, 1000usize), (7.5, 4096), (100.0, 10_000)] {
                let g = TimeGrid::new(t, n).unwrap();
                let q = WeightedQuadrature::new(p, &g).unwrap();
                let exact = t.powf(p + 1.0) / (p + 1.0);
                let rel = (q.total_weight() / exact - 1.0).abs();
                assert!(rel < 1e-12, "p={p} t={t}: {rel:e}");
                let ones = vec![1.0; n];
                assert!((singular_integral(p, &ones, &g).unwrap() / exact - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exponent_domain() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        assert!(singular_integral(-1.0, &[1.0; 10], &g).is_err());
        assert!(singular_integral(-1.5, &[1.0; 10], &g).is_err());
        assert!(singular_integral(0.0, &[1.0; 9], &g).is_err());
        assert!(singular_integral(0.0, &[1.0; 11], &g).is_ok());
    }

    #[test]
    fn left_riemann_sum() {
        let n = 1000;
        let g = TimeGrid::new(1.0, n).unwrap();
        let f: Vec<f64> = g.points().collect();
        let v = singular_integral(0.0, &f, &g).unwrap();
        assert!((v - 0.5).abs() <= g.step(), "{v}");
    }

    #[test]
    fn beta_function_refinement() {
        let err = |n: usize| {
            let g = TimeGrid::new(1.0, n).unwrap();
            let f: Vec<f64> = g.points().collect();
            (singular_integral(-0.5, &f, &g).unwrap() - 4.0 / 3.0).abs()
        };
        let errs: Vec<f64> = (6..=14).map(|k| err(1 << k)).collect();
        for w in errs.windows(2) {
            assert!(w[0] / w[1] >= 1.8, "{} -> {}", w[0], w[1]);
        }
        assert!(errs.last().unwrap() < &1e-3);
    }

    fn ladder<F: Fn(f64) -> f64 + Copy>(x: F) -> Vec<f64> {
        [10.0, 100.0, 1000.0]
            .iter()
            .map(|&t| {
                let g = TimeGrid::new(t, (100.0 * t) as usize).unwrap();
                toeplitz_ratio_fn(0.3, x, |_| 1.0, &g).unwrap()
            })
            .collect()
    }

    #[test]
    fn toeplitz_constant_factor() {
        for &t in &[1.0, 10.0, 50.0] {
            let g = TimeGrid::new(t, 500).unwrap();
            let r = toeplitz_ratio_fn(0.3, |_| 2.5, |s| 1.0 + s.sin().abs(), &g).unwrap();
            assert!((r - 2.5).abs() < 1e-14, "{r}");
        }
    }

    #[test]
    fn toeplitz_increasing_to_one() {
        let r = ladder(|s| s / (1.0 + s));
        assert!(r.iter().all(|&v| v < 1.0));
        assert!(r.windows(2).all(|w| w[1] > w[0]), "{r:?}");
        let e: Vec<f64> = r.iter().map(|v| (v - 1.0).abs()).collect();
        assert!(e.windows(2).all(|w| w[1] <= w[0]), "{e:?}");
    }

    #[test]
    fn toeplitz_decreasing_to_one() {
        let r = ladder(|s| 1.0 + (-s).exp());
        assert!(r.iter().all(|&v| v > 1.0));
        let e: Vec<f64> = r.iter().map(|v| (v - 1.0).abs()).collect();
        assert!(e.windows(2).all(|w| w[1] <= w[0]), "{e:?}");
    }

    #[test]
    fn toeplitz_ladder_errors_shrink() {
        for (name, x, limit) in toeplitz_test_functions() {
            let l = toeplitz_ladder(0.3, name, x, limit, &[10.0, 100.0, 1000.0], 100.0).unwrap();
            assert!(l.monotone, "{l:?}");
            assert_eq!(l.rows.len(), 3);
        }
        assert!(toeplitz_ladder(0.3, "x", |s| s, 0.0, &[1.0], 0.0).is_err());
    }

    #[test]
    fn toeplitz_rejects_degenerate_gamma() {
        let g = TimeGrid::new(5.0, 100).unwrap();
        assert!(matches!(
            toeplitz_ratio_fn(0.3, |s| s, |_| 0.0, &g),
            Err(Error::Degenerate(_))
        ));
        assert!(toeplitz_ratio_fn(0.3, |s| s, |_| -1.0, &g).is_err());
        assert!(toeplitz_ratio_fn(0.0, |s| s, |_| 1.0, &g).is_err());
    }

    #[test]
    fn phi_integral_examples() {
        assert!((gaussian_phi_integral(PhiTag::Gauss, 1.0).unwrap() - 1.772_453_850_905_516).abs() < 1e-14);
        assert!((gaussian_phi_integral(PhiTag::Gauss, 4.0).unwrap() - 0.886_226_925_452_758).abs() < 1e-14);
        assert!((gaussian_phi_integral(PhiTag::Gauss, PI).unwrap() - 1.0).abs() < 1e-15);
        assert!(gaussian_phi_integral(PhiTag::ShiftedGauss, 2.0).is_err());
        assert!(gaussian_phi_integral(PhiTag::Gauss, 0.0).is_err());
    }

    #[test]
    fn phi_integral_matches_quadrature() {
        for &b in &[1.0, 4.0 / 3.0, 2.0, 4.0] {
            let h = 1e-3;
            let q: f64 = (-10_000..=10_000)
                .map(|i| PhiTag::Gauss.eval(i as f64 * h).powf(b) * h)
                .sum();
            assert!((q - gaussian_phi_integral(PhiTag::Gauss, b).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn local_time_expectations() {
        assert!((expected_local_time_bm(0.5).unwrap() - 0.797_884_560_802_865).abs() < 1e-14);
        assert!((expected_local_time_bm(0.75).unwrap() - 1.595_769_121_605_731).abs() < 1e-14);
        assert!(expected_local_time_bm(1.0).is_err());
        assert!(expected_local_time_bm(0.0).is_err());
        // ∫_0^1 (2π s^{2H})^{−1/2} ds by midpoint rule after s = v^{1/(1−H)}.
        for &h in &[0.3, 0.5, 0.75] {
            let k = 1.0 / (1.0 - h);
            let n = 100_000;
            let q: f64 = (0..n)
                .map(|i| {
                    let v = (i as f64 + 0.5) / n as f64;
                    let s = v.powf(k);
                    (2.0 * PI).sqrt().recip() * s.powf(-h) * k * v.powf(k - 1.0) / n as f64
                })
                .sum();
            assert!((q / expected_local_time_bm(h).unwrap() - 1.0).abs() < 1e-6, "H={h}");
        }
    }
}

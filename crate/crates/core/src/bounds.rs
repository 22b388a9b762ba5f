//! Closed-form deviation inequalities for fractional martingales and their
//! constants.
//!
//! Probability bounds are returned raw: they exceed 1 for small `L` and are
//! only capped when presented.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fractional::Alpha;
use crate::{Error, Result};

/// `C_t = 2 + √2·t²`.
pub fn c_t(t: f64) -> f64 {
    2.0 + std::f64::consts::SQRT_2 * t * t
}

fn check_betas(beta: f64, beta_prime: f64) -> Result<()> {
    if !(beta_prime > beta) || !beta.is_finite() || !beta_prime.is_finite() {
        return Err(Error::constraint(format!(
            "beta' > beta required, got beta = {beta}, beta' = {beta_prime}"
        )));
    }
    Ok(())
}

/// `κ = (4π)^{1/2} (ββ′/(β′−β))^{3/2}`.
pub fn kappa_case_i(beta: f64, beta_prime: f64) -> Result<f64> {
    check_betas(beta, beta_prime)?;
    Ok((4.0 * PI).sqrt() * (beta * beta_prime / (beta_prime - beta)).powf(1.5))
}

/// `κ = (π/2)^{1/2} ε^{−3/2}`.
pub fn kappa_eps(eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::constraint(format!("eps > 0 required, got {eps}")));
    }
    Ok((PI / 2.0).sqrt() * eps.powf(-1.5))
}

/// `c₁ = 2^{11/2} π^{1/2} (ββ′/(β′−β))^{3/2} [β(β′−2)/(β′−β)]^{(β′−2)/(2β)}`.
pub fn c1_constant(beta: f64, beta_prime: f64) -> Result<f64> {
    check_betas(beta, beta_prime)?;
    if !(beta > 2.0) {
        return Err(Error::constraint(format!("beta > 2 required, got {beta}")));
    }
    let d = beta_prime - beta;
    let bracket = beta * (beta_prime - 2.0) / d;
    Ok(
        2f64.powf(5.5)
            * PI.sqrt()
            * (beta * beta_prime / d).powf(1.5)
            * bracket.powf((beta_prime - 2.0) / (2.0 * beta)),
    )
}

/// `C_{β,β′} = [β(β′−2)/(β′−β)]^{(β′−2)/β}`.
pub fn c_beta_betaprime(beta: f64, beta_prime: f64) -> Result<f64> {
    check_betas(beta, beta_prime)?;
    if !(beta_prime > 2.0) {
        return Err(Error::constraint(format!("beta' > 2 required, got {beta_prime}")));
    }
    let bracket = beta * (beta_prime - 2.0) / (beta_prime - beta);
    Ok(bracket.powf((beta_prime - 2.0) / beta))
}

/// Case of the exponential inequality together with its case parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "case")]
pub enum Case {
    /// `α < 0`, conditioning on `(∫|ξ|^{β′})^{2/β′} ≤ ν_t`.
    I { beta_prime: f64 },
    /// `0 < ε < α`, conditioning on `∫ξ² ≤ ν_t`.
    Ii { eps: f64 },
    /// `0 < ε < ½ + α`, `|ξ| ≤ c_∞`, unconditional.
    Iii { eps: f64, c_inf: f64 },
}

impl Case {
    pub fn name(&self) -> &'static str {
        match self {
            Case::I { .. } => "i",
            Case::Ii { .. } => "ii",
            Case::Iii { .. } => "iii",
        }
    }

    pub fn beta_prime(&self) -> Option<f64> {
        match *self {
            Case::I { beta_prime } => Some(beta_prime),
            _ => None,
        }
    }

    pub fn eps(&self) -> Option<f64> {
        match *self {
            Case::Ii { eps } | Case::Iii { eps, .. } => Some(eps),
            Case::I { .. } => None,
        }
    }

    /// Exponent `q` of the conditioning statistic `(∫|ξ|^q)^{2/q}`, if any.
    pub fn conditioning_exponent(&self) -> Option<f64> {
        match *self {
            Case::I { beta_prime } => Some(beta_prime),
            Case::Ii { .. } => Some(2.0),
            Case::Iii { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    pub alpha: Alpha,
    pub case: Case,
    #[serde(rename = "L")]
    pub l: f64,
    pub t: f64,
    /// Conditioning level `ν_t`; ignored in case iii.
    pub nu: f64,
}

impl BoundSpec {
    pub fn new(alpha: Alpha, case: Case, l: f64, t: f64, nu: f64) -> Result<Self> {
        let spec = BoundSpec { alpha, case, l, t, nu };
        spec.validate()?;
        Ok(spec)
    }

    pub fn beta(&self) -> f64 {
        self.alpha.beta()
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.alpha.value();
        if !(self.l >= 1.0) || !self.l.is_finite() {
            return Err(Error::constraint(format!("L >= 1 required, got {}", self.l)));
        }
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(Error::constraint(format!("t > 0 required, got {}", self.t)));
        }
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return Err(Error::constraint(format!("nu_t >= 0 required, got {}", self.nu)));
        }
        match self.case {
            Case::I { beta_prime } => {
                if !(a < 0.0) {
                    return Err(Error::constraint(format!("case i requires alpha < 0, got {a}")));
                }
                check_betas(self.beta(), beta_prime)?;
            }
            Case::Ii { eps } => {
                if !(a > 0.0) {
                    return Err(Error::constraint(format!("case ii requires alpha > 0, got {a}")));
                }
                if !(eps > 0.0 && eps < a) {
                    return Err(Error::constraint(format!(
                        "case ii requires 0 < eps < alpha, got eps = {eps}, alpha = {a}"
                    )));
                }
            }
            Case::Iii { eps, c_inf } => {
                if !(eps > 0.0 && eps < 0.5 + a) {
                    return Err(Error::constraint(format!(
                        "case iii requires 0 < eps < 1/2 + alpha, got eps = {eps}, alpha = {a}"
                    )));
                }
                if !(c_inf > 0.0) || !c_inf.is_finite() {
                    return Err(Error::constraint(format!(
                        "case iii requires a positive c_inf, got {c_inf}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Evaluated inequality: `P(sup_{s≤t}|M_s| ≥ threshold, event) ≤ probability_bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub threshold: f64,
    pub probability_bound: f64,
    pub c_t: f64,
    pub kappa: f64,
    /// `c₁` in case i.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    /// Power of `t` dividing `κ²L²` in the exponent.
    pub t_power: f64,
}

impl BoundValue {
    pub fn capped(&self) -> f64 {
        self.probability_bound.min(1.0)
    }
}

fn tail(c_t: f64, kappa: f64, l: f64, t: f64, t_power: f64) -> f64 {
    c_t * (-(kappa * kappa * l * l) / t.powf(t_power)).exp()
}

fn expect_case<T>(spec: &BoundSpec, name: &str, v: Option<T>) -> Result<T> {
    v.ok_or_else(|| {
        Error::constraint(format!(
            "bound for case {name} called with a case {} spec",
            spec.case.name()
        ))
    })
}

pub fn bound_theorem_i(spec: &BoundSpec) -> Result<BoundValue> {
    spec.validate()?;
    let bp = expect_case(spec, "i", spec.case.beta_prime())?;
    let b = spec.beta();
    let kappa = kappa_case_i(b, bp)?;
    let c1 = c1_constant(b, bp)?;
    let q = (bp - b) / (b * bp);
    let ct = c_t(spec.t);
    Ok(BoundValue {
        threshold: spec.l * c1 * spec.t.powf(q / 2.0) * spec.nu.sqrt(),
        probability_bound: tail(ct, kappa, spec.l, spec.t, q),
        c_t: ct,
        kappa,
        c1: Some(c1),
        t_power: q,
    })
}

pub fn bound_theorem_ii(spec: &BoundSpec) -> Result<BoundValue> {
    spec.validate()?;
    let eps = match spec.case {
        Case::Ii { eps } => eps,
        _ => return expect_case(spec, "ii", None),
    };
    let a = spec.alpha.value();
    let kappa = kappa_eps(eps)?;
    let ct = c_t(spec.t);
    let q = 2.0 * (a - eps);
    Ok(BoundValue {
        threshold: 64.0 * spec.l * kappa * spec.t.powf(a - eps) * spec.nu.sqrt(),
        probability_bound: tail(ct, kappa, spec.l, spec.t, q),
        c_t: ct,
        kappa,
        c1: None,
        t_power: q,
    })
}

pub fn bound_theorem_iii(spec: &BoundSpec) -> Result<BoundValue> {
    spec.validate()?;
    let (eps, c_inf) = match spec.case {
        Case::Iii { eps, c_inf } => (eps, c_inf),
        _ => return expect_case(spec, "iii", None),
    };
    let a = spec.alpha.value();
    let kappa = kappa_eps(eps)?;
    let ct = c_t(spec.t);
    let q = 1.0 + 2.0 * a - 2.0 * eps;
    Ok(BoundValue {
        threshold: 64.0 * spec.l * kappa * c_inf * spec.t.powf(0.5 + a - eps),
        probability_bound: tail(ct, kappa, spec.l, spec.t, q),
        c_t: ct,
        kappa,
        c1: None,
        t_power: q,
    })
}

/// Dispatch on the spec's case.
pub fn bound(spec: &BoundSpec) -> Result<BoundValue> {
    match spec.case {
        Case::I { .. } => bound_theorem_i(spec),
        Case::Ii { .. } => bound_theorem_ii(spec),
        Case::Iii { .. } => bound_theorem_iii(spec),
    }
}

/// Fixed-time bound for `P(|M_t| ≥ u, event)` when `α < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "variant")]
pub enum FixedTimeVariant {
    /// Event `∫ξ² ≤ ν_t`; bound `2exp(−u²/(4t^{2α}ν_t))`.
    Intro,
    /// Event `(∫|ξ|^{β′})^{2/β′} ≤ ν_t`; bound
    /// `2exp(−u²/(4C_{β,β′}t^{2(β′−β)/(ββ′)}ν_t))`.
    Remark { beta_prime: f64 },
}

impl FixedTimeVariant {
    pub fn name(&self) -> &'static str {
        match self {
            FixedTimeVariant::Intro => "intro",
            FixedTimeVariant::Remark { .. } => "remark",
        }
    }

    pub fn conditioning_exponent(&self) -> f64 {
        match *self {
            FixedTimeVariant::Intro => 2.0,
            FixedTimeVariant::Remark { beta_prime } => beta_prime,
        }
    }
}

/// The variance proxy `V` in `2exp(−u²/(4V))`.
fn fixed_time_scale(alpha: Alpha, t: f64, nu: f64, variant: FixedTimeVariant) -> Result<f64> {
    let a = alpha.value();
    if !(a < 0.0) {
        return Err(Error::constraint(format!(
            "fixed-time bound requires alpha < 0, got {a}"
        )));
    }
    if !(t > 0.0) || !(nu >= 0.0) {
        return Err(Error::constraint(format!(
            "t > 0 and nu_t >= 0 required, got t = {t}, nu_t = {nu}"
        )));
    }
    match variant {
        FixedTimeVariant::Intro => Ok(t.powf(2.0 * a) * nu),
        FixedTimeVariant::Remark { beta_prime } => {
            let b = alpha.beta();
            let c = c_beta_betaprime(b, beta_prime)?;
            Ok(c * t.powf(2.0 * (beta_prime - b) / (b * beta_prime)) * nu)
        }
    }
}

pub fn bound_fixed_time(alpha: Alpha, u: f64, t: f64, nu: f64, variant: FixedTimeVariant) -> Result<f64> {
    let v = fixed_time_scale(alpha, t, nu, variant)?;
    if !(u > 0.0) {
        return Err(Error::constraint(format!("u > 0 required, got {u}")));
    }
    Ok(2.0 * (-(u * u) / (4.0 * v)).exp())
}

/// The level `u` at which [`bound_fixed_time`] equals `target ∈ (0, 2)`.
pub fn fixed_time_level(alpha: Alpha, target: f64, t: f64, nu: f64, variant: FixedTimeVariant) -> Result<f64> {
    if !(target > 0.0 && target < 2.0) {
        return Err(Error::constraint(format!(
            "target bound must lie in (0, 2), got {target}"
        )));
    }
    let v = fixed_time_scale(alpha, t, nu, variant)?;
    Ok((4.0 * v * (2.0 / target).ln()).sqrt())
}

/// `2exp(−a²t/(2c))`, bounding `P(sup_{s≤t}|M_s| ≥ at)` when `⟨M⟩_t ≤ ct`.
pub fn bound_classical(a: f64, t: f64, c: f64) -> Result<f64> {
    if !(a > 0.0 && t > 0.0 && c > 0.0) {
        return Err(Error::constraint(format!(
            "a, t, c > 0 required, got a = {a}, t = {t}, c = {c}"
        )));
    }
    Ok(2.0 * (-(a * a * t) / (2.0 * c)).exp())
}

fn check_mayo(alpha: f64, eps: f64) -> Result<()> {
    if !(alpha > -0.5 && alpha < 0.5) {
        return Err(Error::constraint(format!(
            "alpha must satisfy -1/2 < alpha < 1/2, got {alpha}"
        )));
    }
    if !(eps > alpha && eps > 0.0 && eps < 1.0) {
        return Err(Error::constraint(format!(
            "constant requires max(alpha, 0) < eps < 1, got alpha = {alpha}, eps = {eps}"
        )));
    }
    Ok(())
}

/// `ln(x^{1−ε}/(1+x)^{1−α})` as a function of `y = ln x`; concave in `y`.
fn mayo_log_objective(alpha: f64, eps: f64, y: f64) -> f64 {
    let log1p_x = if y > 0.0 {
        y + (-y).exp().ln_1p()
    } else {
        y.exp().ln_1p()
    };
    (1.0 - eps) * y - (1.0 - alpha) * log1p_x
}

/// Constant `C = (|α|/ε)·sup_{x≥0} x^{1−ε}/(1+x)^{1−α}` for
/// `|(u+h)^α − u^α| ≤ C h^ε u^{α−ε}`, at the stationary point
/// `x* = (1−ε)/(ε−α)`. Zero when `α = 0`.
pub fn mayo_constant(alpha: f64, eps: f64) -> Result<f64> {
    check_mayo(alpha, eps)?;
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let x = (1.0 - eps) / (eps - alpha);
    let m = x.powf(1.0 - eps) / (1.0 + x).powf(1.0 - alpha);
    Ok(alpha.abs() / eps * m)
}

/// [`mayo_constant`] by golden-section search over `ln x ∈ [−50, 50]`.
pub fn mayo_constant_numeric(alpha: f64, eps: f64) -> Result<f64> {
    check_mayo(alpha, eps)?;
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let f = |y: f64| mayo_log_objective(alpha, eps, y);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (-50.0f64, 50.0f64);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    Ok(alpha.abs() / eps * f(0.5 * (a + b)).exp())
}

/// Whether `|(u+h)^α − u^α| ≤ C h^ε u^{α−ε}` holds at `(u, h)`.
pub fn mayo_check(alpha: f64, eps: f64, c: f64, u: f64, h: f64) -> bool {
    let lhs = u.powf(alpha) * (alpha * (h / u).ln_1p()).exp_m1().abs();
    let rhs = c * h.powf(eps) * u.powf(alpha - eps);
    lhs <= rhs
}

/// Ten `(α, ε)` pairs spread over the valid domain of [`mayo_constant`].
pub fn mayo_sweep_pairs() -> Vec<(f64, f64)> {
    vec![
        (-0.45, 0.05),
        (-0.4, 0.5),
        (-0.25, 0.5),
        (-0.1, 0.9),
        (-0.05, 0.2),
        (0.05, 0.1),
        (0.1, 0.6),
        (0.25, 0.3),
        (0.4, 0.7),
        (0.45, 0.95),
    ]
}

/// Outcome of checking the inequality on a square log-grid of `(u, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MayoSweep {
    pub alpha: f64,
    pub eps: f64,
    pub constant: f64,
    pub numeric: f64,
    pub relative_gap: f64,
    pub points: usize,
    pub failures: usize,
}

impl MayoSweep {
    pub fn pass(&self) -> bool {
        self.failures == 0 && self.relative_gap <= 1e-8
    }
}

/// Check the inequality on a `size × size` log-grid of `[lo, hi]²`.
pub fn mayo_sweep(alpha: f64, eps: f64, size: usize, lo: f64, hi: f64) -> Result<MayoSweep> {
    let constant = mayo_constant(alpha, eps)?;
    let numeric = mayo_constant_numeric(alpha, eps)?;
    let relative_gap = if constant == 0.0 {
        numeric.abs()
    } else {
        (numeric / constant - 1.0).abs()
    };
    let pts = log_grid(lo, hi, size);
    let mut failures = 0;
    for &u in &pts {
        for &h in &pts {
            if !mayo_check(alpha, eps, constant, u, h) {
                failures += 1;
            }
        }
    }
    Ok(MayoSweep {
        alpha,
        eps,
        constant,
        numeric,
        relative_gap,
        points: pts.len() * pts.len(),
        failures,
    })
}

fn log_grid(lo: f64, hi: f64, size: usize) -> Vec<f64> {
    if size == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..size)
        .map(|i| (a + (b - a) * i as f64 / (size - 1) as f64).exp())
        .collect()
}

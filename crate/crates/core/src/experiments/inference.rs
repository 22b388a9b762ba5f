use serde::{Deserialize, Serialize};

use crate::paths::inverse_normal_cdf;
use crate::{Error, Result};

/// Two-sided normal quantile for a confidence `level`.
pub fn z_for_level(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::constraint(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    Ok(inverse_normal_cdf(0.5 + 0.5 * level))
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn score_interval(k: usize, n: usize, level: f64) -> Result<(f64, f64)> {
    if n == 0 || k > n {
        return Err(Error::constraint(format!(
            "need 0 <= k <= N and N >= 1, got k = {k}, N = {n}"
        )));
    }
    let z = z_for_level(level)?;
    Ok(wilson(k, n, z))
}

pub(crate) fn wilson(k: usize, n: usize, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo.min(p), hi.max(p))
}

/// Two-sample Kolmogorov–Smirnov distance `sup_x |F_a(x) − F_b(x)|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::constraint("KS distance needs two nonempty samples"));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::Degenerate("KS sample contains NaN".into()));
    }
    let sa = crate::stats::sorted(a);
    let sb = crate::stats::sorted(b);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

fn ks_scale(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    ((n + m) / (n * m)).sqrt()
}

/// Asymptotic critical value `c(a)·√((n+m)/(nm))` with
/// `c(a) = √(−ln(a/2)/2)`; `a = 0.01` gives `c ≈ 1.6276`.
pub fn ks_critical_value(n: usize, m: usize, significance: f64) -> Result<f64> {
    if !(significance > 0.0 && significance < 1.0) || n == 0 || m == 0 {
        return Err(Error::constraint(format!(
            "need nonempty samples and significance in (0, 1), got n = {n}, m = {m}, a = {significance}"
        )));
    }
    Ok((-(significance / 2.0).ln() / 2.0).sqrt() * ks_scale(n, m))
}

/// Null standard deviation of the KS distance, `≈ 0.26·√((n+m)/(nm))`.
pub fn ks_null_std_error(n: usize, m: usize) -> f64 {
    0.2603 * ks_scale(n, m)
}

/// Outcome of the "decreasing trend" rule: the last statistic is at most
/// half the first, and no step up exceeds two standard errors of the
/// difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendVerdict {
    pub last_over_first: f64,
    /// Largest `(s_{k+1} − s_k) / SE(s_{k+1} − s_k)` over the ladder.
    pub max_increase_z: f64,
    pub decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub statistic: String,
    pub t_values: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub verdict: TrendVerdict,
}

impl TrendReport {
    pub fn new(
        statistic: impl Into<String>,
        t_values: Vec<f64>,
        values: Vec<f64>,
        std_errors: Vec<f64>,
    ) -> Result<Self> {
        if t_values.len() < 2 || values.len() != t_values.len() || std_errors.len() != t_values.len() {
            return Err(Error::constraint(format!(
                "trend needs at least two points with one value and SE each, got {} t, {} values, {} SEs",
                t_values.len(),
                values.len(),
                std_errors.len()
            )));
        }
        if !t_values.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::constraint(format!(
                "t values must be strictly increasing, got {t_values:?}"
            )));
        }
        let verdict = trend_verdict(&values, &std_errors);
        Ok(TrendReport {
            statistic: statistic.into(),
            t_values,
            values,
            std_errors,
            verdict,
        })
    }

    pub fn decreasing(&self) -> bool {
        self.verdict.decreasing
    }
}

pub fn trend_verdict(values: &[f64], std_errors: &[f64]) -> TrendVerdict {
    let first = values[0];
    let last = *values.last().expect("nonempty");
    let last_over_first = if first == 0.0 {
        if last == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        last / first
    };
    let mut max_z = f64::NEG_INFINITY;
    let mut steps_ok = true;
    for k in 0..values.len() - 1 {
        let rise = values[k + 1] - values[k];
        let se = (std_errors[k].powi(2) + std_errors[k + 1].powi(2)).sqrt();
        let z = if se > 0.0 {
            rise / se
        } else if rise > 0.0 {
            f64::INFINITY
        } else if rise < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        };
        max_z = max_z.max(z);
        if rise > 2.0 * se {
            steps_ok = false;
        }
    }
    let halved = if first == 0.0 { last == 0.0 } else { last <= 0.5 * first };
    TrendVerdict {
        last_over_first,
        max_increase_z: max_z,
        decreasing: halved && steps_ok,
    }
}

/// `P(sup_{s≤t} |W_s| ≥ a)` for standard Brownian motion, from the
/// reflection-principle series for the exit time of `(−a, a)`.
pub fn bm_sup_tail(a: f64, t: f64) -> f64 {
    if a <= 0.0 {
        return 1.0;
    }
    let x = a / t.sqrt();
    let pi = std::f64::consts::PI;
    let mut inside = 0.0;
    for k in 0..200 {
        let m = (2 * k + 1) as f64;
        let term = (-(m * m) * pi * pi / (8.0 * x * x)).exp() / m;
        inside += if k % 2 == 0 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (1.0 - 4.0 / pi * inside).clamp(0.0, 1.0)
}

//! Order-stable reductions shared by the Monte Carlo code.
//!
//! Replicate results are always collected in stream-index order before being
//! reduced, so every reduction here sees the same sequence regardless of the
//! worker count. Compensated summation keeps the result insensitive to the
//! magnitude spread of the terms.

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().collect::<CompensatedSum>().value()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    sum(xs.iter().copied()) / xs.len() as f64
}

/// Unbiased sample variance (two-pass, compensated).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    sum(xs.iter().map(|x| (x - m) * (x - m))) / (xs.len() - 1) as f64
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let count = xs.len();
        let mean = mean(xs);
        let std_error = if count > 1 {
            (variance(xs) / count as f64).sqrt()
        } else {
            f64::NAN
        };
        MeanEstimate { mean, std_error, count }
    }
}

/// Standard error of the unbiased variance estimator, using the sample
/// fourth central moment.
pub fn variance_std_error(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = sum(xs.iter().map(|x| (x - m).powi(2))) / n;
    let m4 = sum(xs.iter().map(|x| (x - m).powi(4))) / n;
    ((m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}

/// Empirical quantile by the nearest-rank rule on a sorted copy.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let sorted = sorted(xs);
    quantile_sorted(&sorted, p)
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Distribution-free standard error of the `p`-quantile: half the width of
/// the order-statistic interval spanning one binomial standard deviation of
/// ranks on either side.
pub fn quantile_std_error_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len() as f64;
    let spread = (n * p * (1.0 - p)).sqrt();
    let lo = quantile_sorted(sorted, ((n * p - spread) / n).max(0.0));
    let hi = quantile_sorted(sorted, ((n * p + spread) / n).min(1.0));
    0.5 * (hi - lo)
}

//! Monte Carlo estimates, normal and Clopper–Pearson intervals.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::beta_reg;

/// Jackknife block count for nonlinear statistics.
pub const JACKKNIFE_BLOCKS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
    pub ci_level: f64,
    pub ci_half_width: f64,
}

impl MCEstimate {
    pub fn new(mean: f64, std_error: f64, n: usize, ci_level: f64) -> Self {
        Self { mean, std_error, n, ci_level, ci_half_width: normal_quantile_two_sided(ci_level) * std_error }
    }

    /// Sample mean with `sd / sqrt(n)` standard error.
    pub fn from_samples(values: &[f64], ci_level: f64) -> Result<Self> {
        let (mean, var) = mean_var(values)?;
        Ok(Self::new(mean, (var / values.len() as f64).sqrt(), values.len(), ci_level))
    }

    /// An exactly known value (zero variance).
    pub fn exact(mean: f64, n: usize, ci_level: f64) -> Self {
        Self::new(mean, 0.0, n, ci_level)
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.ci_half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci_half_width
    }

    pub fn covers(&self, value: f64) -> bool {
        (self.mean - value).abs() <= self.ci_half_width
    }

    /// Same estimate reported at another confidence level.
    pub fn at_level(&self, ci_level: f64) -> Self {
        Self::new(self.mean, self.std_error, self.n, ci_level)
    }
}

/// Mean and unbiased variance; errors on empty input or non-finite values.
pub fn mean_var(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let n = values.len() as f64;
    // shift by the first value: constant inputs give their value and zero
    // variance exactly
    let shift = values[0];
    let offset = values.iter().map(|v| v - shift).sum::<f64>() / n;
    let mean = shift + offset;
    if !mean.is_finite() {
        return Err(Error::NonFiniteResult("sample mean".into()));
    }
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - shift - offset).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok((mean, var))
}

/// Two-sided standard normal quantile `z` with `P(|Z| <= z) = level`.
pub fn normal_quantile_two_sided(level: f64) -> f64 {
    standard_normal().inverse_cdf(0.5 + 0.5 * level)
}

/// `P(Z >= x)` for standard normal `Z`.
pub fn normal_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid parameters")
}

/// Exact binomial (Clopper–Pearson) interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: usize, n: usize, level: f64) -> (f64, f64) {
    assert!(k <= n && n > 0);
    let tail = 0.5 * (1.0 - level);
    let (kf, nf) = (k as f64, n as f64);
    let lower = if k == 0 { 0.0 } else { beta_quantile(kf, nf - kf + 1.0, tail) };
    let upper = if k == n {
        1.0
    } else if k == 0 {
        1.0 - tail.powf(1.0 / nf)
    } else {
        beta_quantile(kf + 1.0, nf - kf, 1.0 - tail)
    };
    (lower, upper)
}

/// Inverse of the regularized incomplete beta function by bisection.
fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Jackknife standard error of a statistic computed from per-block
/// sufficient statistics. `stat` maps summed block statistics to the estimate.
pub fn jackknife_se<const K: usize>(blocks: &[[f64; K]], stat: impl Fn(&[f64; K]) -> f64) -> f64 {
    let b = blocks.len();
    if b < 2 {
        return 0.0;
    }
    let mut total = [0.0; K];
    for blk in blocks {
        for (t, v) in total.iter_mut().zip(blk) {
            *t += v;
        }
    }
    let leave_out: Vec<f64> = blocks
        .iter()
        .map(|blk| {
            let mut rest = total;
            for (r, v) in rest.iter_mut().zip(blk) {
                *r -= v;
            }
            stat(&rest)
        })
        .collect();
    let mean = leave_out.iter().sum::<f64>() / b as f64;
    let ss: f64 = leave_out.iter().map(|v| (v - mean).powi(2)).sum();
    ((b as f64 - 1.0) / b as f64 * ss).sqrt()
}

/// Splits `0..n` into `blocks` contiguous, nearly equal ranges.
pub(crate) fn block_ranges(n: usize, blocks: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    let blocks = blocks.min(n).max(1);
    (0..blocks).map(move |b| (b * n / blocks)..((b + 1) * n / blocks))
}

//! Scalar differential entropy and non-Gaussianity from samples.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::source::gaussian_unit_entropy;

/// Minimum sample count for any scalar estimator.
pub const MIN_SAMPLES: usize = 10;

/// Negentropy estimates at or below this value are treated as estimator failure.
pub const NEGENTROPY_FLOOR: f64 = -0.1;

/// Scalar entropy estimator. `None` parameters select the defaults:
/// spacing `m = ⌊√n⌋`, `⌈n^{1/3}⌉` histogram bins.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntropyMethod {
    VasicekSpacing { m: Option<usize> },
    Histogram { bins: Option<usize> },
}

impl Default for EntropyMethod {
    fn default() -> Self {
        EntropyMethod::VasicekSpacing { m: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMethodKind {
    VasicekSpacing,
    Histogram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub method: EntropyMethodKind,
    pub n: usize,
    /// Spacing `m` or bin count.
    pub parameter: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegentropyEstimate {
    pub value: f64,
    pub entropy_method: EntropyMethodKind,
}

fn check_sample(x: &[f64]) -> Result<()> {
    if x.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: x.len(),
            need: MIN_SAMPLES,
        });
    }
    if let Some(col) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: col, col: 0 });
    }
    let first = x[0];
    if x.iter().all(|&v| v == first) {
        return Err(Error::DegenerateSample);
    }
    Ok(())
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Differential entropy of a scalar sample, in nats.
pub fn entropy_scalar(x: &[f64], method: EntropyMethod) -> Result<EntropyEstimate> {
    check_sample(x)?;
    let n = x.len();
    match method {
        EntropyMethod::VasicekSpacing { m } => vasicek(x, m.unwrap_or_else(|| default_spacing(n))),
        EntropyMethod::Histogram { bins } => histogram(x, bins.unwrap_or_else(|| default_bins(n))),
    }
}

pub fn default_spacing(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).max(1)
}

pub fn default_bins(n: usize) -> usize {
    ((n as f64).cbrt().ceil() as usize).max(2)
}

/// m-spacing estimate with the Wieczorkowski–Grzegorzewski bias correction.
/// Order statistics beyond the sample ends are clamped to the extremes.
fn vasicek(x: &[f64], m: usize) -> Result<EntropyEstimate> {
    let n = x.len();
    if m < 1 || 2 * m >= n {
        return Err(Error::InvalidConfig(format!("spacing m={m} must satisfy 1 <= m < n/2 (n={n})")));
    }
    let s = sorted(x);
    // ties give zero spacings; floor them at the smallest positive gap
    let min_gap = s
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let scale = n as f64 / (2.0 * m as f64);
    let mut acc = 0.0;
    for i in 0..n {
        let hi = s[(i + m).min(n - 1)];
        let lo = s[i.saturating_sub(m)];
        acc += (scale * (hi - lo).max(min_gap)).ln();
    }
    let nf = n as f64;
    let mf = m as f64;
    let tail: f64 = (1..=m).map(|i| digamma((i + m - 1) as f64)).sum();
    let value = acc / nf - nf.ln() + (2.0 * mf).ln() - (1.0 - 2.0 * mf / nf) * digamma(2.0 * mf)
        + digamma(nf + 1.0)
        - 2.0 / nf * tail;
    Ok(EntropyEstimate {
        value,
        method: EntropyMethodKind::VasicekSpacing,
        n,
        parameter: m,
    })
}

/// Plug-in entropy of an equal-width histogram plus the log bin width.
fn histogram(x: &[f64], bins: usize) -> Result<EntropyEstimate> {
    if bins < 2 {
        return Err(Error::InvalidConfig(format!("bin count must be >= 2, got {bins}")));
    }
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in x {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let n = x.len() as f64;
    let plug_in: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    Ok(EntropyEstimate {
        value: plug_in + width.ln(),
        method: EntropyMethodKind::Histogram,
        n: x.len(),
        parameter: bins,
    })
}

/// Variance about the sample mean, `1/n` normalization.
pub fn centered_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// `G(x) = ½ ln(2πe var x) − H(x)` with the default entropy estimator.
pub fn negentropy_scalar(x: &[f64]) -> Result<NegentropyEstimate> {
    negentropy_with(x, EntropyMethod::default())
}

pub fn negentropy_with(x: &[f64], method: EntropyMethod) -> Result<NegentropyEstimate> {
    let h = entropy_scalar(x, method)?;
    let var = centered_variance(x);
    let value = gaussian_unit_entropy() + 0.5 * var.ln() - h.value;
    if value <= NEGENTROPY_FLOOR {
        return Err(Error::EstimatorFailure(value));
    }
    Ok(NegentropyEstimate {
        value,
        entropy_method: h.method,
    })
}

/// Monte-Carlo standard error of [`negentropy_scalar`] at the full sample
/// size, from `reps` random half splits: `se² ≈ mean((G₁ − G₂)²) / 4`.
pub fn negentropy_standard_error(x: &[f64], rng: &mut Rng, reps: usize) -> Result<f64> {
    check_sample(x)?;
    let n = x.len();
    let half = n / 2;
    if half < MIN_SAMPLES || reps == 0 {
        return Err(Error::TooFewSamples {
            got: n,
            need: 2 * MIN_SAMPLES,
        });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut acc = 0.0;
    for _ in 0..reps {
        // Fisher–Yates
        for i in (1..n).rev() {
            let j = (rng.uniform() * (i + 1) as f64) as usize;
            idx.swap(i, j.min(i));
        }
        let a: Vec<f64> = idx[..half].iter().map(|&i| x[i]).collect();
        let b: Vec<f64> = idx[half..2 * half].iter().map(|&i| x[i]).collect();
        let d = negentropy_scalar(&a)?.value - negentropy_scalar(&b)?.value;
        acc += d * d;
    }
    Ok((acc / reps as f64 / 4.0).sqrt())
}

//! Nonparametric score function `ψ = −q'/q` from a Gaussian kernel density.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::entropy::centered_variance;
use crate::error::{Error, Result};

pub const MIN_SCORE_SAMPLES: usize = 1000;
pub const DEFAULT_SCORE_BINS: usize = 256;

/// Kernel support in bandwidths; the Gaussian kernel beyond this is below 1e-8.
const KERNEL_REACH: f64 = 6.0;
/// Binning grid resolution relative to the table nodes.
const REFINE: usize = 8;

/// Density and score sampled on a uniform grid, linearly interpolated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub start: f64,
    pub step: f64,
    pub bandwidth: f64,
    pub density: Vec<f64>,
    pub score: Vec<f64>,
    /// Range of `score`, used to clamp extrapolation.
    pub score_min: f64,
    pub score_max: f64,
}

/// Normal-reference bandwidth for a density-derivative estimate,
/// `1.06 σ n^{-1/7}`: Silverman's constant at the derivative rate.
pub fn score_bandwidth(n: usize, sigma: f64) -> f64 {
    1.06 * sigma * (n as f64).powf(-1.0 / 7.0)
}

/// Variance-corrected Gaussian kernel density on `bins` nodes over
/// `[min − 3h, max + 3h]` and its score `−q̂'/q̂` at those nodes. The sample
/// is linearly binned first, so the cost is `O(n + bins·h/step)`.
pub fn score_table(x: &[f64], bins: usize) -> Result<ScoreTable> {
    if x.len() < MIN_SCORE_SAMPLES {
        return Err(Error::TooFewSamples {
            got: x.len(),
            need: MIN_SCORE_SAMPLES,
        });
    }
    if bins < 2 {
        return Err(Error::InvalidConfig(format!("score table needs >= 2 nodes, got {bins}")));
    }
    if let Some(row) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row, col: 0 });
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let (lo, hi) = (s[0], s[s.len() - 1]);
    if hi <= lo {
        return Err(Error::DegenerateSample);
    }
    let sigma = centered_variance(&s).sqrt();
    let h = score_bandwidth(s.len(), sigma);
    // Shrink toward the mean so the smoothed density keeps the sample
    // variance; the kernel would otherwise inflate it by h².
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let shrink = 1.0 / (1.0 + (h / sigma).powi(2)).sqrt();
    for v in s.iter_mut() {
        *v = mean + (*v - mean) * shrink;
    }
    let start = lo - 3.0 * h;
    let step = (hi - lo + 6.0 * h) / (bins - 1) as f64;
    // linear binning onto a grid REFINE times finer than the table, then a
    // discrete convolution with the kernel
    let fine = (bins - 1) * REFINE + 1;
    let fstep = step / REFINE as f64;
    let mut counts = vec![0.0; fine];
    for &v in &s {
        let pos = (v - start) / fstep;
        let i = (pos.floor() as usize).min(fine - 2);
        let frac = pos - i as f64;
        counts[i] += 1.0 - frac;
        counts[i + 1] += frac;
    }
    let reach = (KERNEL_REACH * h / fstep).ceil() as usize;
    let kernel: Vec<f64> = (0..=reach)
        .map(|d| {
            let u = d as f64 * fstep / h;
            (-0.5 * u * u).exp()
        })
        .collect();
    let norm = 1.0 / (s.len() as f64 * h * (2.0 * PI).sqrt());
    let mut density = Vec::with_capacity(bins);
    let mut score = Vec::with_capacity(bins);
    for k in 0..bins {
        let g = k * REFINE;
        let (mut k0, mut k1) = (0.0, 0.0);
        for i in g.saturating_sub(reach)..=(g + reach).min(fine - 1) {
            let c = counts[i];
            if c == 0.0 {
                continue;
            }
            let (d, sign) = if g >= i { (g - i, 1.0) } else { (i - g, -1.0) };
            let w = c * kernel[d];
            k0 += w;
            k1 += sign * d as f64 * fstep / h * w;
        }
        density.push(k0 * norm);
        // −q'/q = (1/h) Σ u φ(u) / Σ φ(u)
        score.push(if k0 > 0.0 { k1 / (h * k0) } else { 0.0 });
    }
    let score_min = score.iter().copied().fold(f64::INFINITY, f64::min);
    let score_max = score.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ScoreTable {
        start,
        step,
        bandwidth: h,
        density,
        score,
        score_min,
        score_max,
    })
}

impl ScoreTable {
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.score.len()).map(move |k| self.start + k as f64 * self.step)
    }

    fn interp(&self, values: &[f64], s: f64) -> f64 {
        let last = values.len() - 1;
        let pos = (s - self.start) / self.step;
        let k = if pos < 0.0 {
            0
        } else {
            (pos.floor() as usize).min(last - 1)
        };
        let frac = pos - k as f64;
        values[k] + frac * (values[k + 1] - values[k])
    }

    /// Interpolated score; linear extrapolation outside the grid, clamped to
    /// the table's range.
    pub fn eval(&self, s: f64) -> f64 {
        self.interp(&self.score, s).clamp(self.score_min, self.score_max)
    }

    pub fn density_at(&self, s: f64) -> f64 {
        self.interp(&self.density, s).max(0.0)
    }
}

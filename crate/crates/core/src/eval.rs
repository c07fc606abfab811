//! Separation quality and the sample-level decomposition report.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{
    mutual_information, negentropy_scalar, negentropy_standard_error, MiEstimate, MiMethod, NegentropyEstimate,
};
use crate::estimators::mi::{MAX_MI_DIM, MIN_MI_SAMPLES};
use crate::gaussian::{correlation, sample_covariance};
use crate::ica::objective_value;
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct AmariIndex {
    /// In `[0, 1]`; 0 exactly when the gain is a scaled permutation.
    pub value: f64,
    pub gain: DMatrix<f64>,
}

/// Amari performance index of `G = B A`, normalized by `2N(N − 1)`:
///
/// `Σ_i (Σ_j |g_ij| / max_k |g_ik| − 1) + Σ_j (Σ_i |g_ij| / max_k |g_kj| − 1)`,
///
/// evaluated after scaling each row of `G` to unit norm. That fixes the
/// output scale, so `D P G` and `G P` score the same as `G`.
pub fn amari_index(gain: &DMatrix<f64>) -> Result<AmariIndex> {
    let n = gain.nrows();
    if gain.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: gain.ncols() });
    }
    if let Some(k) = gain.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: k % n.max(1), col: k / n.max(1) });
    }
    let mut a = gain.abs();
    for mut row in a.row_iter_mut() {
        let norm = row.norm();
        if norm == 0.0 {
            return Err(Error::DegenerateGain);
        }
        row /= norm;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let row = a.row(i);
        let max = row.max();
        if max == 0.0 {
            return Err(Error::DegenerateGain);
        }
        acc += row.sum() / max - 1.0;
    }
    for j in 0..n {
        let col = a.column(j);
        let max = col.max();
        if max == 0.0 {
            return Err(Error::DegenerateGain);
        }
        acc += col.sum() / max - 1.0;
    }
    let value = if n > 1 { acc / (2 * n * (n - 1)) as f64 } else { 0.0 };
    Ok(AmariIndex {
        value,
        gain: gain.clone(),
    })
}

/// Sample estimates of the terms of `I + ΣGᵢ = C + G`. The joint
/// non-Gaussianity is not estimated from samples, so `identity_residual` is
/// only filled by oracle-backed callers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mi: Option<MiEstimate>,
    pub correlation: f64,
    pub marginal_negentropies: Vec<NegentropyEstimate>,
    /// Half-split standard error of each marginal negentropy.
    pub marginal_negentropy_se: Vec<f64>,
    pub objective_proxy: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub identity_residual: Option<f64>,
    pub n_samples: usize,
    pub n_channels: usize,
}

impl DecompositionReport {
    pub fn negentropy_sum(&self) -> f64 {
        self.marginal_negentropies.iter().map(|g| g.value).sum()
    }
}

const SE_REPS: usize = 8;

/// Mutual information is estimated only for 2 or 3 channels with at least
/// 1000 samples; `seed` drives the standard-error resampling.
pub fn diagnose(data: &Dataset, seed: u64) -> Result<DecompositionReport> {
    let (t, n) = (data.n_samples(), data.n_channels());
    let correlation = correlation(&sample_covariance(data)?);
    let mut rng = Rng::new(seed);
    let mut marginal_negentropies = Vec::with_capacity(n);
    let mut marginal_negentropy_se = Vec::with_capacity(n);
    for i in 0..n {
        let x = data.channel(i);
        marginal_negentropies.push(negentropy_scalar(x)?);
        marginal_negentropy_se.push(negentropy_standard_error(x, &mut rng, SE_REPS)?);
    }
    let mi = if (2..=MAX_MI_DIM).contains(&n) && t >= MIN_MI_SAMPLES {
        Some(mutual_information(data, MiMethod::default())?)
    } else {
        None
    };
    Ok(DecompositionReport {
        mi,
        correlation,
        marginal_negentropies,
        marginal_negentropy_se,
        objective_proxy: objective_value(data)?,
        identity_residual: None,
        n_samples: t,
        n_channels: n,
    })
}

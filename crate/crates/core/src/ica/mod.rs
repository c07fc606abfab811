//! Likelihood-based and orthogonal separation of linear mixtures.

mod orthogonal;
mod relative;
mod score_model;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use orthogonal::orthogonal_ica;
pub use relative::relative_gradient_ica;
pub use score_model::{ScoreKind, ScoreModel};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::negentropy_scalar;
use crate::gaussian::{correlation, sample_covariance};
use crate::linalg::inverse_condition;
use crate::model::EPS_DET;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative-gradient step `μ ∈ (0, 1]`.
    pub step: f64,
    /// Gradient iterations, or Jacobi sweeps for the orthogonal solver.
    pub max_iter: usize,
    pub tol: f64,
    /// One score per channel, or a single score shared by all channels.
    pub scores: Vec<ScoreKind>,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: 0.1,
            max_iter: 2000,
            tol: 1e-4,
            scores: vec![ScoreKind::Tanh],
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_score(kind: ScoreKind) -> Self {
        Self {
            scores: vec![kind],
            ..Self::default()
        }
    }

    pub fn validate(&self, n_channels: usize) -> Result<()> {
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::InvalidConfig(format!("step {} is not in (0, 1]", self.step)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("tol {} is not positive", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.scores.len() == 1 || self.scores.len() == n_channels) {
            return Err(Error::InvalidConfig(format!(
                "{} scores given for {n_channels} channels",
                self.scores.len()
            )));
        }
        Ok(())
    }

    /// Fresh per-channel score models.
    pub fn score_models(&self, n_channels: usize) -> Vec<ScoreModel> {
        (0..n_channels)
            .map(|i| ScoreModel::new(self.scores[i.min(self.scores.len() - 1)]))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparationResult {
    pub demixing: DMatrix<f64>,
    /// `data · demixingᵀ`.
    pub recovered: Dataset,
    pub iterations: usize,
    pub converged: bool,
    /// Relative gradient: `‖offdiag F‖_F` before each update. Orthogonal:
    /// the largest per-pair gain of `ΣĜᵢ` in each sweep.
    pub trajectory: Vec<f64>,
    /// `Ĉ − ΣĜᵢ` at each objective checkpoint.
    pub objective: Vec<f64>,
    /// Step in use when the solver stopped.
    pub final_step: f64,
    /// Orthogonal solver only: the best rotation leaves the outputs
    /// indistinguishable from Gaussian.
    pub no_improvement: bool,
}

fn check_samples(data: &Dataset) -> Result<()> {
    let (t, n) = (data.n_samples(), data.n_channels());
    if t <= 10 * n {
        return Err(Error::TooFewSamples { got: t, need: 10 * n + 1 });
    }
    Ok(())
}

/// `F_ij = (1/T) Σ_t ψ_i(Y_ti) Y_tj`.
pub fn stationarity_matrix(y: &Dataset, scores: &[ScoreModel]) -> Result<DMatrix<f64>> {
    let (t, n) = (y.n_samples(), y.n_channels());
    if scores.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: scores.len() });
    }
    let mut psi = DMatrix::zeros(t, n);
    for (i, model) in scores.iter().enumerate() {
        for (row, &v) in y.channel(i).iter().enumerate() {
            let p = model.psi(v);
            if !p.is_finite() {
                return Err(Error::NonFinite { row, col: i });
            }
            psi[(row, i)] = p;
        }
    }
    let f = psi.transpose() * y.samples() / t as f64;
    if let Some(k) = f.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: k % n, col: k / n });
    }
    Ok(f)
}

/// `Ĉ(Y) − Σ Ĝ(Y_i)`, equal to the mutual information up to a constant
/// over `Y = B X`.
pub fn objective_value(y: &Dataset) -> Result<f64> {
    let c = correlation(&sample_covariance(y)?);
    let mut g = 0.0;
    for i in 0..y.n_channels() {
        g += negentropy_scalar(y.channel(i))?.value;
    }
    Ok(c - g)
}

/// [`objective_value`] of `data · Bᵀ` for each `B`.
pub fn objective_trace(data: &Dataset, bs: &[DMatrix<f64>]) -> Result<Vec<f64>> {
    bs.iter()
        .map(|b| {
            let ratio = inverse_condition(b);
            if ratio <= EPS_DET {
                return Err(Error::SingularCovariance { ratio });
            }
            objective_value(&data.transform(b)?)
        })
        .collect()
}

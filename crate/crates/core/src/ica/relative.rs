use nalgebra::DMatrix;

use super::{check_samples, objective_value, stationarity_matrix, ScoreModel, SeparationResult, SolverConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gaussian::{sample_covariance, whitener};

/// Iterations between adaptive score refreshes and objective checks.
const OUTER: usize = 10;
/// Allowed rise of the objective proxy between checkpoints before the step
/// is halved. The likelihood optimum and the proxy optimum differ slightly.
const OBJECTIVE_SLACK: f64 = 1e-3;
const MAX_HALVINGS: usize = 20;
const MAX_ENTRY: f64 = 1e12;

fn off_diagonal(f: &DMatrix<f64>) -> DMatrix<f64> {
    let mut d = f.clone();
    d.fill_diagonal(0.0);
    d
}

fn outputs(data: &Dataset, b: &DMatrix<f64>, iteration: usize) -> Result<Dataset> {
    data.transform(b).map_err(|e| match e {
        Error::NonFinite { .. } => Error::Diverged { iteration },
        other => other,
    })
}

/// Maximum-likelihood separation by the relative gradient
/// `B ← (I − μ offdiag F(Y)) B`, started at the whitener of `data`.
pub fn relative_gradient_ica(data: &Dataset, config: &SolverConfig) -> Result<SeparationResult> {
    let n = data.n_channels();
    config.validate(n)?;
    check_samples(data)?;
    let mut b = whitener(&sample_covariance(data)?)?.matrix;
    let mut scores: Vec<ScoreModel> = config.score_models(n);
    let eye = DMatrix::<f64>::identity(n, n);

    let mut mu = config.step;
    let mut halvings = 0;
    let mut checkpoint: Option<(DMatrix<f64>, f64)> = None;
    let mut trajectory = Vec::new();
    let mut objective = Vec::new();
    let mut converged = false;
    let mut it = 0;
    while it < config.max_iter {
        let y = outputs(data, &b, it)?;
        if it % OUTER == 0 {
            let proxy = objective_value(&y)?;
            if let Some((saved, best)) = &checkpoint {
                if proxy > best + OBJECTIVE_SLACK {
                    b = saved.clone();
                    mu *= 0.5;
                    halvings += 1;
                    if halvings > MAX_HALVINGS {
                        break;
                    }
                    // the checkpoint itself is re-evaluated on the next pass
                    checkpoint = None;
                    continue;
                }
            }
            objective.push(proxy);
            checkpoint = Some((b.clone(), proxy));
            for (i, model) in scores.iter_mut().enumerate() {
                model.refit(y.channel(i))?;
            }
        }
        let f = stationarity_matrix(&y, &scores).map_err(|e| match e {
            Error::NonFinite { .. } => Error::Diverged { iteration: it },
            other => other,
        })?;
        let norm = crate::linalg::off_diagonal_norm(&f);
        trajectory.push(norm);
        if norm < config.tol {
            converged = true;
            break;
        }
        b = (&eye - mu * off_diagonal(&f)) * &b;
        it += 1;
        if b.iter().any(|v| !v.is_finite() || v.abs() > MAX_ENTRY) {
            return Err(Error::Diverged { iteration: it });
        }
    }
    let recovered = outputs(data, &b, it)?;
    Ok(SeparationResult {
        demixing: b,
        recovered,
        iterations: it,
        converged,
        trajectory,
        objective,
        final_step: mu,
        no_improvement: false,
    })
}

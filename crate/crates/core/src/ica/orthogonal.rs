use std::f64::consts::FRAC_PI_4;

use nalgebra::DMatrix;

use super::{check_samples, objective_value, SeparationResult, SolverConfig};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::estimators::{negentropy_scalar, negentropy_standard_error};
use crate::gaussian::{sample_covariance, whitener};
use crate::linalg::givens;
use crate::rng::Rng;

/// Coarse scan points over the angle period before the golden-section search.
const SCAN: usize = 12;
const ANGLE_TOL: f64 = 1e-4;
/// Half splits used for the noise floor.
const SE_REPS: usize = 8;
/// Outputs whose total non-Gaussianity is below this many standard errors
/// are reported as indistinguishable from Gaussian.
const NOISE_MULT: f64 = 4.0;

/// `Ĝ(c a − s b) + Ĝ(s a + c b)`, the pair objective after rotating by θ.
fn pair_objective(a: &[f64], b: &[f64], theta: f64, buf: &mut (Vec<f64>, Vec<f64>)) -> Result<f64> {
    let (s, c) = theta.sin_cos();
    buf.0.clear();
    buf.1.clear();
    for (&u, &v) in a.iter().zip(b) {
        buf.0.push(c * u - s * v);
        buf.1.push(s * u + c * v);
    }
    Ok(negentropy_scalar(&buf.0)?.value + negentropy_scalar(&buf.1)?.value)
}

/// Best angle in `(−π/4, π/4]` and its objective.
fn best_angle(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    let mut buf = (Vec::with_capacity(a.len()), Vec::with_capacity(a.len()));
    let width = 2.0 * FRAC_PI_4 / SCAN as f64;
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 1..=SCAN {
        let theta = -FRAC_PI_4 + k as f64 * width;
        let v = pair_objective(a, b, theta, &mut buf)?;
        if v > best.1 {
            best = (theta, v);
        }
    }
    // golden section on the bracket around the best scan point
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best.0 - width, best.0 + width);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = pair_objective(a, b, x1, &mut buf)?;
    let mut f2 = pair_objective(a, b, x2, &mut buf)?;
    while hi - lo > ANGLE_TOL {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = pair_objective(a, b, x1, &mut buf)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = pair_objective(a, b, x2, &mut buf)?;
        }
    }
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f > best.1 {
            best = (x, f);
        }
    }
    // the objective has period π/2; fold back into (−π/4, π/4]
    let half_pi = 2.0 * FRAC_PI_4;
    let mut theta = best.0;
    while theta <= -FRAC_PI_4 {
        theta += half_pi;
    }
    while theta > FRAC_PI_4 {
        theta -= half_pi;
    }
    Ok((theta, best.1))
}

/// Whitening followed by Jacobi sweeps of Givens rotations, each chosen to
/// maximize the summed marginal non-Gaussianity of its channel pair.
pub fn orthogonal_ica(data: &Dataset, config: &SolverConfig) -> Result<SeparationResult> {
    let n = data.n_channels();
    config.validate(n)?;
    check_samples(data)?;
    let w = whitener(&sample_covariance(data)?)?.matrix;
    let mut y = data.transform(&w)?;
    let mut u = DMatrix::<f64>::identity(n, n);
    let mut trajectory = Vec::new();
    let mut objective = vec![objective_value(&y)?];
    let mut converged = n < 2;
    let mut sweeps = 0;
    while !converged && sweeps < config.max_iter {
        let mut largest_gain: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (y.channel(i), y.channel(j));
                let current = negentropy_scalar(a)?.value + negentropy_scalar(b)?.value;
                let (theta, value) = best_angle(a, b)?;
                // folding by π/2 can land on a signed permutation of the
                // maximizer, which has the same objective
                if value > current {
                    largest_gain = largest_gain.max(value - current);
                    let g = givens(n, i, j, theta);
                    y = y.transform(&g)?;
                    u = g * u;
                }
            }
        }
        sweeps += 1;
        trajectory.push(largest_gain);
        objective.push(objective_value(&y)?);
        converged = largest_gain < config.tol;
    }
    let demixing = &u * &w;
    let recovered = data.transform(&demixing)?;

    let mut rng = Rng::new(config.seed);
    let (mut total, mut var) = (0.0, 0.0);
    for i in 0..n {
        let x = recovered.channel(i);
        total += negentropy_scalar(x)?.value;
        let se = negentropy_standard_error(x, &mut rng, SE_REPS)?;
        var += se * se;
    }
    let no_improvement = total < NOISE_MULT * var.sqrt();

    Ok(SeparationResult {
        demixing,
        recovered,
        iterations: sweeps,
        converged,
        trajectory,
        objective,
        final_step: config.step,
        no_improvement,
    })
}

//! Closed-form bivariate densities consumed by the quadrature oracles.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::Covariance;
use crate::model::EPS_DET;
use crate::source::SourceSpec;

pub type Mat2 = [[f64; 2]; 2];

/// Half-width of the integration box in standard deviations.
pub const DEFAULT_REACH: f64 = 8.0;

/// Bivariate density with a pointwise closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum AnalyticDensity2D {
    /// Zero-mean Gaussian.
    Gaussian { cov: Mat2 },
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<[f64; 2]>,
        covs: Vec<Mat2>,
    },
    /// Independent coordinates with the given marginals.
    ProductOf1d { first: SourceSpec, second: SourceSpec },
    /// `y = R(θ) s` with `s` drawn from the product density; θ in degrees.
    RotatedProduct {
        first: SourceSpec,
        second: SourceSpec,
        degrees: f64,
    },
    /// Pushforward of `base` under `y = M x`, evaluated as `p(M⁻¹y)/|det M|`.
    Transformed { base: Box<AnalyticDensity2D>, matrix: Mat2 },
}

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn inv2(m: &Mat2) -> Mat2 {
    let d = det2(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

pub fn apply2(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn transpose2(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

pub fn rotation2(degrees: f64) -> Mat2 {
    let (s, c) = degrees.to_radians().sin_cos();
    [[c, -s], [s, c]]
}

pub fn to_dmatrix(m: &Mat2) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
}

/// Rejects singular or non-finite 2×2 maps.
pub fn check_transform(m: &Mat2) -> Result<()> {
    let scale = m.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
    if !m.iter().flatten().all(|v| v.is_finite()) || scale == 0.0 || det2(m).abs() <= EPS_DET * scale * scale {
        return Err(Error::SingularTransform);
    }
    Ok(())
}

fn gaussian_log_density(cov: &Mat2, mean: [f64; 2], x: [f64; 2]) -> f64 {
    let d = det2(cov);
    let (u, v) = (x[0] - mean[0], x[1] - mean[1]);
    let quad = (cov[1][1] * u * u - 2.0 * cov[0][1] * u * v + cov[0][0] * v * v) / d;
    -0.5 * quad - (2.0 * PI).ln() - 0.5 * d.ln()
}

fn in_interval(spec: &SourceSpec, s: f64) -> bool {
    spec.support().is_none_or(|(lo, hi)| (lo..=hi).contains(&s))
}

/// Interval `[lo, hi]` per axis, possibly infinite.
pub type Box2 = [(f64, f64); 2];

/// Bounding box of `M·box`; zero coefficients ignore infinite sides.
fn image_box(m: &Mat2, b: &Box2) -> Box2 {
    let mut out = [(0.0, 0.0); 2];
    for (i, row) in m.iter().enumerate() {
        let (mut lo, mut hi) = (0.0, 0.0);
        for (j, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let (p, q) = (a * b[j].0, a * b[j].1);
            lo += p.min(q);
            hi += p.max(q);
        }
        out[i] = (lo, hi);
    }
    out
}

impl AnalyticDensity2D {
    pub fn gaussian(cov: Mat2) -> Self {
        AnalyticDensity2D::Gaussian { cov }
    }

    pub fn product(first: SourceSpec, second: SourceSpec) -> Self {
        AnalyticDensity2D::ProductOf1d { first, second }
    }

    pub fn rotated(first: SourceSpec, second: SourceSpec, degrees: f64) -> Self {
        AnalyticDensity2D::RotatedProduct { first, second, degrees }
    }

    pub fn transformed(&self, matrix: Mat2) -> Self {
        AnalyticDensity2D::Transformed {
            base: Box::new(self.clone()),
            matrix,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AnalyticDensity2D::Gaussian { cov } => Covariance::new(to_dmatrix(cov)).map(|_| ()),
            AnalyticDensity2D::GaussianMixture { weights, means, covs } => {
                if weights.is_empty() || weights.len() != means.len() || weights.len() != covs.len() {
                    return Err(Error::InvalidDistribution(format!(
                        "mixture needs matching non-empty weights/means/covs, got {}/{}/{}",
                        weights.len(),
                        means.len(),
                        covs.len()
                    )));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(Error::InvalidDistribution("mixture weights must be positive".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidDistribution(format!("mixture weights sum to {total}, not 1")));
                }
                if means.iter().flatten().any(|m| !m.is_finite()) {
                    return Err(Error::InvalidDistribution("mixture means must be finite".into()));
                }
                for c in covs {
                    Covariance::new(to_dmatrix(c))?;
                }
                Ok(())
            }
            AnalyticDensity2D::ProductOf1d { first, second } => {
                first.validate()?;
                second.validate()
            }
            AnalyticDensity2D::RotatedProduct { first, second, degrees } => {
                if !degrees.is_finite() {
                    return Err(Error::InvalidDistribution(format!("rotation angle {degrees} is not finite")));
                }
                first.validate()?;
                second.validate()
            }
            AnalyticDensity2D::Transformed { base, matrix } => {
                check_transform(matrix)?;
                base.validate()
            }
        }
    }

    pub fn log_density(&self, x: [f64; 2]) -> f64 {
        match self {
            AnalyticDensity2D::Gaussian { cov } => gaussian_log_density(cov, [0.0, 0.0], x),
            AnalyticDensity2D::GaussianMixture { weights, means, covs } => {
                let logs: Vec<f64> = weights
                    .iter()
                    .zip(means)
                    .zip(covs)
                    .map(|((w, m), c)| w.ln() + gaussian_log_density(c, *m, x))
                    .collect();
                let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
            }
            AnalyticDensity2D::ProductOf1d { first, second } => first.log_density(x[0]) + second.log_density(x[1]),
            AnalyticDensity2D::RotatedProduct { first, second, degrees } => {
                let s = apply2(&transpose2(&rotation2(*degrees)), x);
                first.log_density(s[0]) + second.log_density(s[1])
            }
            AnalyticDensity2D::Transformed { base, matrix } => {
                base.log_density(apply2(&inv2(matrix), x)) - det2(matrix).abs().ln()
            }
        }
    }

    pub fn density(&self, x: [f64; 2]) -> f64 {
        self.log_density(x).exp()
    }

    /// Whether some coordinate has bounded support, i.e. the density jumps.
    pub fn has_bounded_support(&self) -> bool {
        match self {
            AnalyticDensity2D::Gaussian { .. } | AnalyticDensity2D::GaussianMixture { .. } => false,
            AnalyticDensity2D::ProductOf1d { first, second } | AnalyticDensity2D::RotatedProduct { first, second, .. } => {
                first.support().is_some() || second.support().is_some()
            }
            AnalyticDensity2D::Transformed { base, .. } => base.has_bounded_support(),
        }
    }

    /// Half-planes `a·x ≤ b` whose intersection is the support; empty when
    /// the support is the whole plane.
    pub fn support_halfplanes(&self) -> Vec<([f64; 2], f64)> {
        // constraints on s = m·x from the bounded marginals
        fn axis_planes(first: &SourceSpec, second: &SourceSpec, m: &Mat2) -> Vec<([f64; 2], f64)> {
            let mut out = Vec::new();
            for (row, spec) in m.iter().zip([first, second]) {
                if let Some((lo, hi)) = spec.support() {
                    out.push((*row, hi));
                    out.push(([-row[0], -row[1]], -lo));
                }
            }
            out
        }
        match self {
            AnalyticDensity2D::Gaussian { .. } | AnalyticDensity2D::GaussianMixture { .. } => Vec::new(),
            AnalyticDensity2D::ProductOf1d { first, second } => axis_planes(first, second, &[[1.0, 0.0], [0.0, 1.0]]),
            AnalyticDensity2D::RotatedProduct { first, second, degrees } => {
                axis_planes(first, second, &transpose2(&rotation2(*degrees)))
            }
            AnalyticDensity2D::Transformed { base, matrix } => {
                let inv = inv2(matrix);
                base.support_halfplanes()
                    .into_iter()
                    .map(|(a, b)| {
                        let row = [a[0] * inv[0][0] + a[1] * inv[1][0], a[0] * inv[0][1] + a[1] * inv[1][1]];
                        (row, b)
                    })
                    .collect()
            }
        }
    }

    pub fn in_support(&self, x: [f64; 2]) -> bool {
        match self {
            AnalyticDensity2D::Gaussian { .. } | AnalyticDensity2D::GaussianMixture { .. } => true,
            AnalyticDensity2D::ProductOf1d { first, second } => in_interval(first, x[0]) && in_interval(second, x[1]),
            AnalyticDensity2D::RotatedProduct { first, second, degrees } => {
                let s = apply2(&transpose2(&rotation2(*degrees)), x);
                in_interval(first, s[0]) && in_interval(second, s[1])
            }
            AnalyticDensity2D::Transformed { base, matrix } => base.in_support(apply2(&inv2(matrix), x)),
        }
    }

    /// Bounding box of the support; unbounded directions are infinite.
    pub fn support_box(&self) -> Box2 {
        let full = (f64::NEG_INFINITY, f64::INFINITY);
        let axis = |s: &SourceSpec| s.support().unwrap_or(full);
        match self {
            AnalyticDensity2D::Gaussian { .. } | AnalyticDensity2D::GaussianMixture { .. } => [full, full],
            AnalyticDensity2D::ProductOf1d { first, second } => [axis(first), axis(second)],
            AnalyticDensity2D::RotatedProduct { first, second, degrees } => {
                image_box(&rotation2(*degrees), &[axis(first), axis(second)])
            }
            AnalyticDensity2D::Transformed { base, matrix } => image_box(matrix, &base.support_box()),
        }
    }

    /// Exact mean and covariance.
    pub fn moments(&self) -> ([f64; 2], Mat2) {
        match self {
            AnalyticDensity2D::Gaussian { cov } => ([0.0, 0.0], *cov),
            AnalyticDensity2D::GaussianMixture { weights, means, covs } => {
                let mut mean = [0.0; 2];
                let mut second = [[0.0; 2]; 2];
                for ((w, m), c) in weights.iter().zip(means).zip(covs) {
                    for i in 0..2 {
                        mean[i] += w * m[i];
                        for j in 0..2 {
                            second[i][j] += w * (c[i][j] + m[i] * m[j]);
                        }
                    }
                }
                for i in 0..2 {
                    for j in 0..2 {
                        second[i][j] -= mean[i] * mean[j];
                    }
                }
                (mean, second)
            }
            AnalyticDensity2D::ProductOf1d { .. } | AnalyticDensity2D::RotatedProduct { .. } => {
                ([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]])
            }
            AnalyticDensity2D::Transformed { base, matrix } => {
                let (m, c) = base.moments();
                (apply2(matrix, m), mul2(&mul2(matrix, &c), &transpose2(matrix)))
            }
        }
    }

    /// Integration box: mean ± 8σ per axis, clipped to the support box.
    pub fn extent(&self) -> Box2 {
        let (mean, cov) = self.moments();
        let support = self.support_box();
        let mut out = [(0.0, 0.0); 2];
        for i in 0..2 {
            let r = DEFAULT_REACH * cov[i][i].sqrt();
            out[i] = ((mean[i] - r).max(support[i].0), (mean[i] + r).min(support[i].1));
        }
        out
    }

    /// Exact joint non-Gaussianity where a closed form is available.
    pub fn exact_negentropy(&self) -> Option<f64> {
        match self {
            AnalyticDensity2D::Gaussian { .. } => Some(0.0),
            AnalyticDensity2D::GaussianMixture { .. } => None,
            AnalyticDensity2D::ProductOf1d { first, second } | AnalyticDensity2D::RotatedProduct { first, second, .. } => {
                Some(first.negentropy() + second.negentropy())
            }
            AnalyticDensity2D::Transformed { base, .. } => base.exact_negentropy(),
        }
    }
}

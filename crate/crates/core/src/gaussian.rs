//! Closed-form geometry of zero-mean Gaussians.
//!
//! Covariances follow the zero-mean convention: `(1/T) Σ x xᵀ`, no mean
//! subtraction. Callers that need centering do it on the dataset first.
//! All divergences are in nats.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::sorted_symmetric_eigen;
use crate::model::EPS_DET;

const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric positive-definite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Covariance {
    matrix: DMatrix<f64>,
}

impl Covariance {
    /// Validates symmetry (relative `1e-12`) and positive definiteness
    /// (smallest eigenvalue above `EPS_DET` times the largest).
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let scale = matrix.amax();
        if !scale.is_finite() || scale == 0.0 {
            return Err(Error::SingularCovariance { ratio: 0.0 });
        }
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::InvalidDistribution(format!(
                "covariance is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let matrix = 0.5 * (&matrix + matrix.transpose());
        let (vals, _) = sorted_symmetric_eigen(&matrix);
        let (largest, smallest) = (vals[0], vals[vals.len() - 1]);
        if !(largest > 0.0) || smallest <= EPS_DET * largest {
            return Err(Error::SingularCovariance {
                ratio: smallest / largest,
            });
        }
        Ok(Self { matrix })
    }

    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(n, n, data))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Diagonal part, the covariance of the product-of-marginals Gaussian.
    pub fn diagonal(&self) -> Covariance {
        Covariance {
            matrix: DMatrix::from_diagonal(&self.matrix.diagonal()),
        }
    }

    /// `D Σ D` for a diagonal `D` given by its entries.
    pub fn scaled(&self, d: &[f64]) -> Result<Covariance> {
        let dm = DMatrix::from_diagonal(&DVector::from_column_slice(d));
        Covariance::new(&dm * &self.matrix * &dm)
    }

    /// `M Σ Mᵀ`.
    pub fn congruence(&self, m: &DMatrix<f64>) -> Result<Covariance> {
        Covariance::new(m * &self.matrix * m.transpose())
    }

    pub fn log_det(&self) -> f64 {
        let chol = self.matrix.clone().cholesky().expect("validated positive definite");
        2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Entropy of `N(0, Σ)`: `½ ln((2πe)^N det Σ)`.
    pub fn gaussian_entropy(&self) -> f64 {
        0.5 * (self.dim() as f64 * (2.0 * PI * std::f64::consts::E).ln() + self.log_det())
    }

    /// Log-density of `N(0, Σ)` at `x`.
    pub fn log_density(&self, x: &DVector<f64>) -> f64 {
        let chol = self.matrix.clone().cholesky().expect("validated positive definite");
        let z = chol.solve(x);
        -0.5 * (x.dot(&z) + self.dim() as f64 * (2.0 * PI).ln() + self.log_det())
    }
}

/// The best Gaussian approximation `N(Cov Y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianApprox {
    pub cov: Covariance,
}

/// Sample covariance `(1/T) Σ_t x_t x_tᵀ`.
pub fn sample_covariance(data: &Dataset) -> Result<Covariance> {
    let x = data.samples();
    let c = x.transpose() * x / data.n_samples() as f64;
    Covariance::new(0.5 * (&c + c.transpose()))
}

fn check_dims(p: &Covariance, q: &Covariance) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    Ok(())
}

/// `KLD(N(p) ‖ N(q)) = ½[tr(q⁻¹p) − N + ln(det q / det p)]`.
pub fn gaussian_kld(p: &Covariance, q: &Covariance) -> Result<f64> {
    check_dims(p, q)?;
    let chol = q.matrix.clone().cholesky().ok_or(Error::SingularCovariance { ratio: 0.0 })?;
    let trace = chol.solve(&p.matrix).trace();
    let kld = 0.5 * (trace - p.dim() as f64 + q.log_det() - p.log_det());
    // round-off can leave a tiny negative value when p ≈ q
    Ok(kld.max(0.0))
}

/// Correlation measure `C = KLD(N(Σ) ‖ N(diag Σ)) = ½ ln(det diag Σ / det Σ)`.
pub fn correlation(cov: &Covariance) -> f64 {
    let log_diag: f64 = cov.matrix.diagonal().iter().map(|d| d.ln()).sum();
    (0.5 * (log_diag - cov.log_det())).max(0.0)
}

/// Whitening matrix `W` with `W Σ Wᵀ = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct WhiteningTransform {
    pub matrix: DMatrix<f64>,
    pub source_cov: Covariance,
}

/// Symmetric inverse square root `Σ^{-1/2} = V Λ^{-1/2} Vᵀ`.
pub fn whitener(cov: &Covariance) -> Result<WhiteningTransform> {
    let (vals, vecs) = sorted_symmetric_eigen(&cov.matrix);
    let largest = vals[0];
    if let Some(&bad) = vals.iter().find(|&&v| v <= EPS_DET * largest) {
        return Err(Error::SingularCovariance { ratio: bad / largest });
    }
    let inv_sqrt = DVector::from_iterator(vals.len(), vals.iter().map(|v| 1.0 / v.sqrt()));
    let w = &vecs * DMatrix::from_diagonal(&inv_sqrt) * vecs.transpose();
    Ok(WhiteningTransform {
        matrix: w,
        source_cov: cov.clone(),
    })
}

impl WhiteningTransform {
    /// Relative Frobenius deviation of `W Σ Wᵀ` from the identity.
    pub fn residual(&self) -> f64 {
        let n = self.matrix.nrows();
        let m = &self.matrix * self.source_cov.matrix() * self.matrix.transpose();
        (m - DMatrix::<f64>::identity(n, n)).norm() / (n as f64).sqrt()
    }
}

/// KLD between zero-mean Gaussians computed as cross-entropy minus entropy,
/// with log-determinants from eigenvalues and an explicit inverse. Shares
/// no code path with [`gaussian_kld`].
fn kld_via_entropies(p: &Covariance, q: &Covariance) -> f64 {
    let n = p.dim() as f64;
    let logdet = |c: &Covariance| sorted_symmetric_eigen(c.matrix()).0.iter().map(|v| v.ln()).sum::<f64>();
    let q_inv = q.matrix.clone().try_inverse().expect("validated positive definite");
    let cross = 0.5 * (n * (2.0 * PI).ln() + logdet(q) + (q_inv * p.matrix()).trace());
    let own = 0.5 * (n * (2.0 * PI * std::f64::consts::E).ln() + logdet(p));
    cross - own
}

/// Residual of `KLD(P‖N(Σ)) = KLD(P‖N(Cov P)) + KLD(N(Cov P)‖N(Σ))` for a
/// Gaussian `P = N(data_cov)`. The left side and the non-Gaussianity term
/// come from the entropy route, the last term from [`gaussian_kld`].
pub fn verify_gaussian_pythagoras(data_cov: &Covariance, target: &Covariance) -> Result<f64> {
    let [lhs, non_gaussianity, kld] = gaussian_pythagoras_terms(data_cov, target)?;
    Ok((lhs - non_gaussianity - kld).abs())
}

/// `[KLD(P‖N(target)), KLD(P‖N(Cov P)), KLD(N(Cov P)‖N(target))]` for
/// `P = N(data_cov)`.
pub fn gaussian_pythagoras_terms(data_cov: &Covariance, target: &Covariance) -> Result<[f64; 3]> {
    check_dims(data_cov, target)?;
    Ok([
        kld_via_entropies(data_cov, target),
        kld_via_entropies(data_cov, data_cov),
        gaussian_kld(data_cov, target)?,
    ])
}

//! The linear mixture model `X = A S` and its simulator.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::inverse_condition;
use crate::rng::Rng;
use crate::source::SourceSpec;

/// Relative singular-value threshold below which a matrix is treated as singular.
pub const EPS_DET: f64 = 1e-12;

/// Ground truth for simulation: a square invertible mixing matrix and one
/// source distribution per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingModel {
    mixing: DMatrix<f64>,
    sources: Vec<SourceSpec>,
}

/// JSON form of a [`MixingModel`]; the matrix is stored row by row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixingModelFile {
    pub mixing: Vec<Vec<f64>>,
    pub sources: Vec<SourceSpec>,
}

impl MixingModel {
    pub fn new(mixing: DMatrix<f64>, sources: Vec<SourceSpec>) -> Result<Self> {
        let n = sources.len();
        if n == 0 {
            return Err(Error::EmptyChannels);
        }
        if mixing.nrows() != n || mixing.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if mixing.nrows() != n { mixing.nrows() } else { mixing.ncols() },
            });
        }
        for s in &sources {
            s.validate()?;
        }
        if mixing.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("mixing matrix has non-finite entries".into()));
        }
        let ratio = inverse_condition(&mixing);
        if ratio <= EPS_DET {
            return Err(Error::SingularMatrix { ratio });
        }
        Ok(Self { mixing, sources })
    }

    /// Random mixing whose condition number lies in `[1, max_condition]`:
    /// `A = U diag(σ) Vᵀ` with Haar-distributed `U, V` and singular values
    /// spread log-uniformly between 1 and `max_condition`.
    pub fn random(sources: Vec<SourceSpec>, max_condition: f64, rng: &mut Rng) -> Result<Self> {
        if !(max_condition >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "condition bound must be >= 1, got {max_condition}"
            )));
        }
        let n = sources.len();
        let u = random_orthogonal(n, rng);
        let v = random_orthogonal(n, rng);
        let mut sv: Vec<f64> = (0..n).map(|_| max_condition.powf(rng.uniform())).collect();
        // pin the extremes so the full range is used
        if n >= 2 {
            sv[0] = max_condition;
            sv[n - 1] = 1.0;
        }
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sv));
        Self::new(u * d * v.transpose(), sources)
    }

    pub fn mixing(&self) -> &DMatrix<f64> {
        &self.mixing
    }

    pub fn sources(&self) -> &[SourceSpec] {
        &self.sources
    }

    pub fn dim(&self) -> usize {
        self.sources.len()
    }

    pub fn to_file(&self) -> MixingModelFile {
        MixingModelFile {
            mixing: self.mixing.row_iter().map(|r| r.iter().copied().collect()).collect(),
            sources: self.sources.clone(),
        }
    }

    pub fn from_file(file: &MixingModelFile) -> Result<Self> {
        let n = file.mixing.len();
        if file.mixing.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidConfig("mixing matrix must be square".into()));
        }
        let flat: Vec<f64> = file.mixing.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(n, n, &flat), file.sources.clone())
    }
}

/// Haar-random orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn random_orthogonal(n: usize, rng: &mut Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Draws `t` independent source vectors and mixes them: returns `(X, S)`
/// with `X = S Aᵀ`. Channel `i` of `S` is drawn from its own child stream.
pub fn simulate(model: &MixingModel, t: usize, rng: &Rng) -> Result<(Dataset, Dataset)> {
    if t < 2 {
        return Err(Error::TooFewSamples { got: t, need: 2 });
    }
    let columns: Vec<Vec<f64>> = model
        .sources
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let mut child = rng.child(i as u64);
            (0..t).map(|_| spec.sample(&mut child)).collect()
        })
        .collect();
    let s = Dataset::from_columns(&columns)?;
    let x = s.transform(&model.mixing)?;
    Ok((x, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gaussian_covariance() {
        let model = MixingModel::new(DMatrix::identity(2, 2), vec![SourceSpec::Gaussian; 2]).unwrap();
        let (x, _) = simulate(&model, 10_000, &Rng::new(3)).unwrap();
        let cov = x.samples().transpose() * x.samples() / 10_000.0;
        assert!((cov - DMatrix::identity(2, 2)).norm() < 0.05);
    }

    #[test]
    fn diagonal_mixing_is_exact() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let model = MixingModel::new(a, vec![SourceSpec::Laplace, SourceSpec::Uniform]).unwrap();
        let (x, s) = simulate(&model, 500, &Rng::new(9)).unwrap();
        for t in 0..500 {
            assert_eq!(x.samples()[(t, 0)], 2.0 * s.samples()[(t, 0)]);
            assert_eq!(x.samples()[(t, 1)], 3.0 * s.samples()[(t, 1)]);
        }
    }

    #[test]
    fn same_seed_bit_identical() {
        let mut r = Rng::new(5);
        let model = MixingModel::random(vec![SourceSpec::Laplace, SourceSpec::CoshReciprocal], 10.0, &mut r)
            .unwrap();
        let (x1, _) = simulate(&model, 1000, &Rng::new(11)).unwrap();
        let (x2, _) = simulate(&model, 1000, &Rng::new(11)).unwrap();
        assert!(x1
            .samples()
            .iter()
            .zip(x2.samples().iter())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn rejects_singular_mixing() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let err = MixingModel::new(a, vec![SourceSpec::Laplace; 2]).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { .. }));
    }

    #[test]
    fn random_mixing_condition_bound() {
        let mut rng = Rng::new(1);
        for _ in 0..20 {
            let m = MixingModel::random(vec![SourceSpec::Laplace; 4], 10.0, &mut rng).unwrap();
            let cond = 1.0 / inverse_condition(m.mixing());
            assert!(cond <= 10.0 + 1e-9 && cond >= 1.0, "cond {cond}");
        }
    }

    #[test]
    fn model_file_round_trip() {
        let mut rng = Rng::new(2);
        let m = MixingModel::random(vec![SourceSpec::Uniform, SourceSpec::GeneralizedGaussian { beta: 3.0 }], 5.0, &mut rng)
            .unwrap();
        let json = serde_json::to_string(&m.to_file()).unwrap();
        let back = MixingModel::from_file(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}

//! Exact divergences between finite bivariate distributions.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::IdentityReport;
use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;

/// Bivariate probability table; rows index the first variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DiscreteJoint {
    probabilities: DMatrix<f64>,
}

impl DiscreteJoint {
    pub fn new(probabilities: DMatrix<f64>) -> Result<Self> {
        let (r, c) = probabilities.shape();
        if r == 0 || c == 0 {
            return Err(Error::InvalidDistribution("joint table is empty".into()));
        }
        for j in 0..c {
            for i in 0..r {
                let v = probabilities[(i, j)];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidDistribution(format!("entry ({i},{j}) = {v} is not a probability")));
                }
            }
        }
        let total = probabilities.sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}, not 1")));
        }
        if let Some(i) = (0..r).find(|&i| probabilities.row(i).iter().all(|&v| v == 0.0)) {
            return Err(Error::InvalidDistribution(format!("row {i} is all zero")));
        }
        if let Some(j) = (0..c).find(|&j| probabilities.column(j).iter().all(|&v| v == 0.0)) {
            return Err(Error::InvalidDistribution(format!("column {j} is all zero")));
        }
        Ok(Self { probabilities })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let c = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|row| row.len() != c) {
            return Err(Error::InvalidDistribution(format!(
                "row {i} has {} entries, expected {c}",
                rows[i].len()
            )));
        }
        Self::new(DMatrix::from_row_iterator(rows.len(), c, rows.iter().flatten().copied()))
    }

    /// Product of two probability vectors.
    pub fn product(a: &[f64], b: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j]))
    }

    pub fn probabilities(&self) -> &DMatrix<f64> {
        &self.probabilities
    }

    pub fn shape(&self) -> (usize, usize) {
        self.probabilities.shape()
    }

    pub fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let p = &self.probabilities;
        let rows = (0..p.nrows()).map(|i| p.row(i).sum()).collect();
        let cols = (0..p.ncols()).map(|j| p.column(j).sum()).collect();
        (rows, cols)
    }
}

impl TryFrom<Vec<Vec<f64>>> for DiscreteJoint {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<DiscreteJoint> for Vec<Vec<f64>> {
    fn from(joint: DiscreteJoint) -> Self {
        let p = joint.probabilities;
        (0..p.nrows()).map(|i| p.row(i).iter().copied().collect()).collect()
    }
}

fn check_probability_vector(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::InvalidDistribution(format!("{name} must be strictly positive")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidDistribution(format!("{name} sums to {total}, not 1")));
    }
    Ok(())
}

/// `Σ p ln(p/q)` with `0 ln 0 = 0`; infinite if `q` vanishes where `p` does not.
pub fn discrete_kld(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| match (a > 0.0, b > 0.0) {
            (false, _) => 0.0,
            (true, false) => f64::INFINITY,
            (true, true) => a * (a / b).ln(),
        })
        .sum()
}

fn joint_kld_to_product(joint: &DiscreteJoint, a: &[f64], b: &[f64]) -> f64 {
    let p = joint.probabilities();
    let mut acc = 0.0;
    for j in 0..p.ncols() {
        for i in 0..p.nrows() {
            let v = p[(i, j)];
            if v > 0.0 {
                acc += v * (v / (a[i] * b[j])).ln();
            }
        }
    }
    acc
}

/// Exact mutual information of the two variables.
pub fn discrete_mi(joint: &DiscreteJoint) -> f64 {
    let (a, b) = joint.marginals();
    joint_kld_to_product(joint, &a, &b).max(0.0)
}

/// `KLD(P ‖ t₁⊗t₂) = I(P) + KLD(P₁‖t₁) + KLD(P₂‖t₂)`, both sides evaluated
/// independently.
pub fn verify_product_pythagoras(joint: &DiscreteJoint, targets: (&[f64], &[f64])) -> Result<IdentityReport> {
    let (r, c) = joint.shape();
    if targets.0.len() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: targets.0.len(),
        });
    }
    if targets.1.len() != c {
        return Err(Error::DimensionMismatch {
            expected: c,
            got: targets.1.len(),
        });
    }
    check_probability_vector("first target marginal", targets.0)?;
    check_probability_vector("second target marginal", targets.1)?;
    let (m1, m2) = joint.marginals();
    let lhs = joint_kld_to_product(joint, targets.0, targets.1);
    let mi = discrete_mi(joint);
    let k1 = discrete_kld(&m1, targets.0);
    let k2 = discrete_kld(&m2, targets.1);
    let terms = BTreeMap::from([
        ("kld_to_targets".to_string(), lhs),
        ("mutual_information".to_string(), mi),
        ("marginal_kld_1".to_string(), k1),
        ("marginal_kld_2".to_string(), k2),
    ]);
    Ok(IdentityReport::new(lhs, mi + k1 + k2, terms))
}

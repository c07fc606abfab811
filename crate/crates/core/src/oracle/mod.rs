//! Exact and quadrature reference computations for the divergence
//! identities, independent of the sample estimators.

pub mod density;
pub mod discrete;
pub mod quadrature;
pub mod suite;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use density::{AnalyticDensity2D, Mat2};
pub use discrete::{discrete_kld, discrete_mi, verify_product_pythagoras, DiscreteJoint};
pub use quadrature::{
    decompose, gaussianity_invariance_check, kld_invariance_check, quad_kld_2d, verify_four_point_identity,
    Decomposition, Grid, DEFAULT_STEP,
};
pub use suite::{builtin_suite, run_suite, IdentityCheck, SuiteSpec};

/// Two sides of an identity and the divergences they were built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs|`.
    pub residual: f64,
    pub terms: BTreeMap<String, f64>,
}

impl IdentityReport {
    pub fn new(lhs: f64, rhs: f64, terms: BTreeMap<String, f64>) -> Self {
        Self {
            lhs,
            rhs,
            residual: (lhs - rhs).abs(),
            terms,
        }
    }

    /// Largest of `residual` and any term whose name ends in `_residual`.
    pub fn worst_residual(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(k, _)| k.ends_with("_residual"))
            .map(|(_, &v)| v)
            .fold(self.residual, f64::max)
    }
}

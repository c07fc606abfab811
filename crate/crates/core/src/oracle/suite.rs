//! Named identity checks: the built-in suite and user-supplied cases.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::density::{rotation2, AnalyticDensity2D, Mat2};
use super::discrete::{verify_product_pythagoras, DiscreteJoint};
use super::quadrature::{
    decompose, gaussianity_invariance_check, kld_invariance_check, quad_kld_2d, verify_four_point_identity, Grid,
    DEFAULT_STEP,
};
use super::IdentityReport;
use crate::error::{Error, Result};
use crate::gaussian::{gaussian_kld, gaussian_pythagoras_terms, Covariance};
use crate::source::SourceSpec;

/// Exact identities: round-off only.
pub const EXACT_THRESHOLD: f64 = 1e-12;
pub const CLOSED_FORM_THRESHOLD: f64 = 1e-10;
pub const QUADRATURE_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub threshold: f64,
    pub passed: bool,
    #[serde(flatten)]
    pub report: IdentityReport,
}

impl IdentityCheck {
    pub fn new(name: impl Into<String>, threshold: f64, report: IdentityReport) -> Self {
        let worst = report.worst_residual();
        let finite = report.lhs.is_finite() && report.rhs.is_finite() && report.terms.values().all(|v| v.is_finite());
        Self {
            name: name.into(),
            threshold,
            passed: finite && worst < threshold,
            report,
        }
    }
}

/// A discrete joint table, optionally with target marginals (its own
/// marginals by default).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointCase {
    pub probabilities: DiscreteJoint,
    #[serde(default)]
    pub targets: Option<(Vec<f64>, Vec<f64>)>,
}

/// User-supplied suite, read from JSON.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    #[serde(default)]
    pub joints: Vec<JointCase>,
    #[serde(default)]
    pub densities: Vec<AnalyticDensity2D>,
    #[serde(default)]
    pub step: Option<f64>,
}

/// Message without a leading "invalid distribution: ", so nested errors
/// do not repeat it.
fn detail(e: impl std::fmt::Display) -> String {
    let text = e.to_string();
    match text.strip_prefix("invalid distribution: ") {
        Some(rest) => rest.to_string(),
        None => text,
    }
}

impl SuiteSpec {
    /// Parses and validates; parse errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SuiteSpec = serde_json::from_str(text).map_err(|e| Error::InvalidDistribution(detail(e)))?;
        for (i, d) in spec.densities.iter().enumerate() {
            d.validate()
                .map_err(|e| Error::InvalidDistribution(format!("densities[{i}]: {}", detail(e))))?;
        }
        if let Some(step) = spec.step {
            if !(step.is_finite() && step > 0.0) {
                return Err(Error::InvalidDistribution(format!("step: must be positive, got {step}")));
            }
        }
        Ok(spec)
    }
}

fn joint_check(name: String, joint: &DiscreteJoint, targets: Option<(&[f64], &[f64])>) -> Result<IdentityCheck> {
    let (m1, m2) = joint.marginals();
    let targets = targets.unwrap_or((&m1, &m2));
    Ok(IdentityCheck::new(name, EXACT_THRESHOLD, verify_product_pythagoras(joint, targets)?))
}

pub fn run_suite(spec: &SuiteSpec) -> Result<Vec<IdentityCheck>> {
    let step = spec.step.unwrap_or(DEFAULT_STEP);
    let mut out = Vec::new();
    for (i, case) in spec.joints.iter().enumerate() {
        let targets = case.targets.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice()));
        let check = joint_check(format!("product_pythagoras[{i}]"), &case.probabilities, targets)
            .map_err(|e| Error::InvalidDistribution(format!("joints[{i}].targets: {}", detail(e))))?;
        out.push(check);
    }
    for (i, p) in spec.densities.iter().enumerate() {
        let report = verify_four_point_identity(p, &Grid::for_density(p, step)?)?;
        out.push(IdentityCheck::new(format!("four_point[{i}]"), QUADRATURE_THRESHOLD, report));
    }
    Ok(out)
}

fn gaussian_check(name: &str, n: usize, p: &[f64], q: &[f64]) -> Result<IdentityCheck> {
    let (p, q) = (Covariance::from_row_slice(n, p)?, Covariance::from_row_slice(n, q)?);
    let [lhs, non_gaussianity, kld] = gaussian_pythagoras_terms(&p, &q)?;
    let terms = BTreeMap::from([
        ("kld_to_target".to_string(), lhs),
        ("non_gaussianity".to_string(), non_gaussianity),
        ("gaussian_kld".to_string(), kld),
    ]);
    Ok(IdentityCheck::new(
        name,
        CLOSED_FORM_THRESHOLD,
        IdentityReport::new(lhs, non_gaussianity + kld, terms),
    ))
}

const STD: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
const RHO_HALF: Mat2 = [[1.0, 0.5], [0.5, 1.0]];

/// The default identity suite at quadrature step `step`.
pub fn builtin_suite(step: f64) -> Result<Vec<IdentityCheck>> {
    let mut out = Vec::new();

    let uniform_pair = DiscreteJoint::from_rows(&[vec![0.25, 0.25], vec![0.25, 0.25]])?;
    let coupled = DiscreteJoint::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]])?;
    let noisy = DiscreteJoint::from_rows(&[vec![0.4, 0.1], vec![0.1, 0.4]])?;
    let wide = DiscreteJoint::from_rows(&[vec![0.10, 0.05, 0.15], vec![0.20, 0.02, 0.08], vec![0.05, 0.25, 0.10]])?;
    out.push(joint_check("product_pythagoras/independent".into(), &uniform_pair, None)?);
    out.push(joint_check("product_pythagoras/coupled_bits".into(), &coupled, None)?);
    out.push(joint_check("product_pythagoras/noisy_bits".into(), &noisy, None)?);
    out.push(joint_check(
        "product_pythagoras/noisy_bits_off_target".into(),
        &noisy,
        Some((&[0.7, 0.3], &[0.5, 0.5])),
    )?);
    out.push(joint_check(
        "product_pythagoras/three_by_three".into(),
        &wide,
        Some((&[0.2, 0.3, 0.5], &[0.6, 0.1, 0.3])),
    )?);

    out.push(gaussian_check("gaussian_pythagoras/bivariate", 2, &[1.0, 0.3, 0.3, 1.0], &[2.0, 0.0, 0.0, 2.0])?);
    out.push(gaussian_check("gaussian_pythagoras/scalar", 1, &[1.0], &[3.0])?);

    let gauss = AnalyticDensity2D::gaussian(RHO_HALF);
    let std = AnalyticDensity2D::gaussian(STD);
    let quad = quad_kld_2d(&gauss, &std, &Grid::covering(&[&gauss, &std], step)?)?;
    let closed = gaussian_kld(
        &Covariance::from_row_slice(2, &[1.0, 0.5, 0.5, 1.0])?,
        &Covariance::identity(2),
    )?;
    out.push(IdentityCheck::new(
        "quadrature_kld/correlated_gaussian",
        1e-4,
        IdentityReport::new(quad, closed, BTreeMap::from([("closed_form".to_string(), closed)])),
    ));

    // KLD to the standard Gaussian of a white density equals its joint
    // non-Gaussianity, predicted here as I + ΣGᵢ − C
    let square = AnalyticDensity2D::rotated(SourceSpec::Uniform, SourceSpec::Uniform, 45.0);
    let kld = quad_kld_2d(&square, &std, &Grid::covering(&[&square, &std], step)?)?;
    let d = decompose(&square, &Grid::for_density(&square, step)?)?;
    let cov = Covariance::from_row_slice(2, &[d.cov[0][0], d.cov[0][1], d.cov[1][0], d.cov[1][1]])?;
    let predicted = d.mutual_information + d.marginal_negentropies.iter().sum::<f64>() - d.correlation
        + gaussian_kld(&cov, &Covariance::identity(2))?;
    out.push(IdentityCheck::new(
        "quadrature_kld/rotated_uniform_vs_prediction",
        QUADRATURE_THRESHOLD,
        IdentityReport::new(
            kld,
            predicted,
            BTreeMap::from([
                ("mutual_information".to_string(), d.mutual_information),
                ("marginal_negentropy_1".to_string(), d.marginal_negentropies[0]),
                ("marginal_negentropy_2".to_string(), d.marginal_negentropies[1]),
                ("correlation".to_string(), d.correlation),
            ]),
        ),
    ));

    let mixture = AnalyticDensity2D::GaussianMixture {
        weights: vec![0.3, 0.7],
        means: vec![[-1.4, 0.6], [0.6, -0.2571428571428571]],
        covs: vec![[[0.5, 0.2], [0.2, 0.8]], [[0.7, -0.1], [-0.1, 0.4]]],
    };
    let four_point = [
        ("four_point/correlated_gaussian", gauss.clone()),
        (
            "four_point/uniform_laplace_product",
            AnalyticDensity2D::product(SourceSpec::Uniform, SourceSpec::Laplace),
        ),
        (
            "four_point/rotated_laplace",
            AnalyticDensity2D::rotated(SourceSpec::Laplace, SourceSpec::Laplace, 30.0),
        ),
        ("four_point/gaussian_mixture", mixture),
    ];
    for (name, p) in four_point {
        let report = verify_four_point_identity(&p, &Grid::for_density(&p, step)?)?;
        out.push(IdentityCheck::new(name, QUADRATURE_THRESHOLD, report));
    }

    let laplaces = AnalyticDensity2D::product(SourceSpec::Laplace, SourceSpec::Laplace);
    out.push(IdentityCheck::new(
        "negentropy_invariance/sheared_uniform",
        QUADRATURE_THRESHOLD,
        gaussianity_invariance_check(
            &AnalyticDensity2D::rotated(SourceSpec::Uniform, SourceSpec::Uniform, 0.0),
            &[[2.0, 1.0], [0.0, 1.0]],
            step,
        )?,
    ));
    out.push(IdentityCheck::new(
        "negentropy_invariance/rotated_laplace",
        QUADRATURE_THRESHOLD,
        gaussianity_invariance_check(&laplaces, &rotation2(37.0), step)?,
    ));
    out.push(IdentityCheck::new(
        "kld_invariance/uniform_laplace_vs_gaussian",
        QUADRATURE_THRESHOLD,
        kld_invariance_check(
            &AnalyticDensity2D::product(SourceSpec::Uniform, SourceSpec::Laplace),
            &std,
            &[[1.2, 0.4], [-0.3, 0.9]],
            step,
        )?,
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_suite_passes() {
        let checks = builtin_suite(DEFAULT_STEP).unwrap();
        assert!(checks.len() >= 12);
        for c in &checks {
            assert!(c.passed, "{c:?}");
        }
        let noisy = checks.iter().find(|c| c.name == "product_pythagoras/noisy_bits").unwrap();
        assert!((noisy.report.terms["mutual_information"] - 0.19274).abs() < 1e-5);
    }

    #[test]
    fn user_spec() {
        let spec = SuiteSpec::from_json(r#"{"joints": [{"probabilities": [[0.4,0.1],[0.1,0.4]]}]}"#).unwrap();
        let checks = run_suite(&spec).unwrap();
        assert_eq!(checks.len(), 1);
        assert!(checks[0].passed);
        assert!((checks[0].report.terms["mutual_information"] - 0.19274).abs() < 1e-5);
        let json = serde_json::to_value(&checks[0]).unwrap();
        for key in ["name", "lhs", "rhs", "residual", "terms", "passed"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn malformed_spec_reports_position() {
        let err = SuiteSpec::from_json("{\n  \"joints\": [{\"probabilities\": [[0.4, 0.1], [0.1]]}]\n}").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::InvalidDistribution(_)));
        assert!(msg.contains("line 2") && msg.contains("row 1"), "{msg}");
        let err = SuiteSpec::from_json(r#"{"densities": [{"form": "gaussian", "cov": [[1,2],[2,1]]}]}"#).unwrap_err();
        assert!(err.to_string().contains("densities[0]"), "{err}");
        assert!(SuiteSpec::from_json(r#"{"jionts": []}"#).is_err());
    }
}

//! Standardized scalar source distributions.
//!
//! Every family is parameterized so that the density has zero mean and unit
//! variance. Each one exposes its density, score `-q'/q`, exact entropy and a
//! sampler, which is what the simulator, the exact oracles and the negative
//! controls need.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::Rng;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Entropy of the unit-variance Gaussian, `½ ln(2πe)`.
pub fn gaussian_unit_entropy() -> f64 {
    0.5 * (2.0 * PI * std::f64::consts::E).ln()
}

/// Zero-mean, unit-variance scalar distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SourceSpec {
    Gaussian,
    /// Uniform on `[-√3, √3]`.
    Uniform,
    /// Laplace with scale `1/√2`.
    Laplace,
    /// Density proportional to `exp(-|s/α|^β)`, α chosen for unit variance.
    GeneralizedGaussian { beta: f64 },
    /// `1/(π cosh s)` rescaled to unit variance: `½ sech(πs/2)`.
    CoshReciprocal,
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SourceSpec::GeneralizedGaussian { beta } if !(beta.is_finite() && beta > 0.0) => Err(
                Error::InvalidDistribution(format!("generalized-gaussian beta must be > 0, got {beta}")),
            ),
            _ => Ok(()),
        }
    }

    /// Parses `gaussian`, `uniform`, `laplace`, `cosh`, `gg:<beta>`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim().to_ascii_lowercase();
        let spec = match t.as_str() {
            "gaussian" | "normal" => SourceSpec::Gaussian,
            "uniform" => SourceSpec::Uniform,
            "laplace" => SourceSpec::Laplace,
            "cosh" | "cosh-reciprocal" | "cosh_reciprocal" | "sech" => SourceSpec::CoshReciprocal,
            _ => {
                let beta = t
                    .strip_prefix("gg:")
                    .or_else(|| t.strip_prefix("generalized-gaussian:"))
                    .and_then(|b| b.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown source family '{text}'")))?;
                SourceSpec::GeneralizedGaussian { beta }
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn name(&self) -> String {
        match self {
            SourceSpec::Gaussian => "gaussian".into(),
            SourceSpec::Uniform => "uniform".into(),
            SourceSpec::Laplace => "laplace".into(),
            SourceSpec::GeneralizedGaussian { beta } => format!("gg:{beta}"),
            SourceSpec::CoshReciprocal => "cosh".into(),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        match *self {
            SourceSpec::Gaussian => true,
            SourceSpec::GeneralizedGaussian { beta } => beta == 2.0,
            _ => false,
        }
    }

    /// Closed support interval, if bounded.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            SourceSpec::Uniform => Some((-SQRT_3, SQRT_3)),
            _ => None,
        }
    }

    fn gg_scale(beta: f64) -> f64 {
        (0.5 * (ln_gamma(1.0 / beta) - ln_gamma(3.0 / beta))).exp()
    }

    pub fn log_density(&self, s: f64) -> f64 {
        match *self {
            SourceSpec::Gaussian => -0.5 * s * s - 0.5 * (2.0 * PI).ln(),
            SourceSpec::Uniform => {
                if s.abs() <= SQRT_3 {
                    -(2.0 * SQRT_3).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            SourceSpec::Laplace => -SQRT_2 * s.abs() - SQRT_2.ln(),
            SourceSpec::GeneralizedGaussian { beta } => {
                let alpha = Self::gg_scale(beta);
                beta.ln() - (2.0 * alpha).ln() - ln_gamma(1.0 / beta) - (s.abs() / alpha).powf(beta)
            }
            SourceSpec::CoshReciprocal => {
                // ln(½ sech(x)) = -ln 2 - ln cosh x, evaluated stably for large |x|
                let x = (FRAC_PI_2 * s).abs();
                -x - (1.0 + (-2.0 * x).exp()).ln()
            }
        }
    }

    pub fn density(&self, s: f64) -> f64 {
        self.log_density(s).exp()
    }

    /// Score function `ψ = -q'/q`. For the uniform family the interior score is 0.
    pub fn score(&self, s: f64) -> f64 {
        match *self {
            SourceSpec::Gaussian => s,
            SourceSpec::Uniform => 0.0,
            SourceSpec::Laplace => SQRT_2 * sign(s),
            SourceSpec::GeneralizedGaussian { beta } => {
                let alpha = Self::gg_scale(beta);
                beta / alpha * (s.abs() / alpha).powf(beta - 1.0) * sign(s)
            }
            SourceSpec::CoshReciprocal => FRAC_PI_2 * (FRAC_PI_2 * s).tanh(),
        }
    }

    /// Exact differential entropy in nats.
    pub fn entropy(&self) -> f64 {
        match *self {
            SourceSpec::Gaussian => gaussian_unit_entropy(),
            SourceSpec::Uniform => (2.0 * SQRT_3).ln(),
            SourceSpec::Laplace => 1.0 + SQRT_2.ln(),
            SourceSpec::GeneralizedGaussian { beta } => {
                let alpha = Self::gg_scale(beta);
                1.0 / beta + (2.0 * alpha).ln() + ln_gamma(1.0 / beta) - beta.ln()
            }
            SourceSpec::CoshReciprocal => 2.0 * std::f64::consts::LN_2,
        }
    }

    /// Exact non-Gaussianity `½ ln(2πe) - H`, in nats.
    pub fn negentropy(&self) -> f64 {
        gaussian_unit_entropy() - self.entropy()
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match *self {
            SourceSpec::Gaussian => StandardNormal.sample(rng),
            SourceSpec::Uniform => SQRT_3 * (2.0 * rng.uniform() - 1.0),
            SourceSpec::Laplace => {
                let u = rng.uniform_open() - 0.5;
                -sign(u) * (1.0 - 2.0 * u.abs()).ln() / SQRT_2
            }
            SourceSpec::GeneralizedGaussian { beta } => {
                let alpha = Self::gg_scale(beta);
                let g: f64 = Gamma::new(1.0 / beta, 1.0).expect("validated beta").sample(rng);
                let s = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
                s * alpha * g.powf(1.0 / beta)
            }
            SourceSpec::CoshReciprocal => {
                let u = rng.uniform_open();
                (2.0 / PI) * (FRAC_PI_2 * u).tan().ln()
            }
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [SourceSpec; 6] = [
        SourceSpec::Gaussian,
        SourceSpec::Uniform,
        SourceSpec::Laplace,
        SourceSpec::GeneralizedGaussian { beta: 4.0 },
        SourceSpec::GeneralizedGaussian { beta: 1.2 },
        SourceSpec::CoshReciprocal,
    ];

    /// Midpoint quadrature of `f` against the density on `[-40, 40]`.
    fn moment(spec: SourceSpec, f: impl Fn(f64) -> f64) -> f64 {
        let (lo, hi) = spec.support().unwrap_or((-40.0, 40.0));
        let n = 400_000;
        let h = (hi - lo) / n as f64;
        (0..n)
            .map(|i| {
                let s = lo + (i as f64 + 0.5) * h;
                spec.density(s) * f(s)
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn densities_are_standardized() {
        for spec in ALL {
            let mass = moment(spec, |_| 1.0);
            let mean = moment(spec, |s| s);
            let var = moment(spec, |s| s * s);
            assert!((mass - 1.0).abs() < 1e-6, "{spec:?} mass {mass}");
            assert!(mean.abs() < 1e-9, "{spec:?} mean {mean}");
            assert!((var - 1.0).abs() < 1e-6, "{spec:?} var {var}");
        }
    }

    #[test]
    fn entropy_matches_quadrature() {
        for spec in ALL {
            let h = moment(spec, |s| -spec.log_density(s));
            assert!((h - spec.entropy()).abs() < 1e-6, "{spec:?}: {h} vs {}", spec.entropy());
        }
    }

    #[test]
    fn known_negentropies() {
        assert!((SourceSpec::Uniform.negentropy() - 0.176_49).abs() < 1e-4);
        assert!((SourceSpec::Laplace.negentropy() - 0.072_36).abs() < 1e-4);
        assert!(SourceSpec::Gaussian.negentropy().abs() < 1e-15);
        let gg2 = SourceSpec::GeneralizedGaussian { beta: 2.0 };
        assert!(gg2.negentropy().abs() < 1e-12);
    }

    #[test]
    fn score_is_minus_log_derivative() {
        for spec in [SourceSpec::Gaussian, SourceSpec::Laplace, SourceSpec::CoshReciprocal] {
            for &s in &[-2.3, -0.7, 0.4, 1.9] {
                let eps = 1e-6;
                let fd = -(spec.log_density(s + eps) - spec.log_density(s - eps)) / (2.0 * eps);
                assert!((fd - spec.score(s)).abs() < 1e-6, "{spec:?} at {s}");
            }
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!(SourceSpec::parse("Laplace").unwrap(), SourceSpec::Laplace);
        assert_eq!(
            SourceSpec::parse("gg:3").unwrap(),
            SourceSpec::GeneralizedGaussian { beta: 3.0 }
        );
        assert!(SourceSpec::parse("cauchy").is_err());
        assert!(SourceSpec::parse("gg:-1").is_err());
    }

    /// Empirical mean and variance of 10^6 draws lie within 5 standard errors.
    #[test]
    fn sampler_moments() {
        let n = 1_000_000;
        for (k, spec) in ALL.into_iter().enumerate() {
            let mut rng = Rng::new(100 + k as u64);
            let xs: Vec<f64> = (0..n).map(|_| spec.sample(&mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
            let m4 = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n as f64;
            let se_mean = (1.0 / n as f64).sqrt();
            let se_var = ((m4 - 1.0) / n as f64).sqrt();
            assert!(mean.abs() < 5.0 * se_mean, "{spec:?} mean {mean}");
            assert!((m2 - 1.0).abs() < 5.0 * se_var, "{spec:?} var {m2}");
        }
    }
}

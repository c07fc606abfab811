//! Source models `ψ = −q'/q` used by the likelihood-based solver.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{score_table, ScoreTable, DEFAULT_SCORE_BINS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Tanh,
    Cube,
    /// Gaussian score; every rotation of white data is stationary.
    Identity,
    /// Kernel estimate of the current output's own score.
    Adaptive,
}

impl ScoreKind {
    pub fn name(self) -> &'static str {
        match self {
            ScoreKind::Tanh => "tanh",
            ScoreKind::Cube => "cube",
            ScoreKind::Identity => "identity",
            ScoreKind::Adaptive => "adaptive",
        }
    }

    /// Density whose score the model is.
    pub fn density_name(self) -> &'static str {
        match self {
            ScoreKind::Tanh => "q(s) ∝ 1/cosh(s)",
            ScoreKind::Cube => "q(s) ∝ exp(−s⁴/4)",
            ScoreKind::Identity => "standard normal",
            ScoreKind::Adaptive => "Gaussian kernel estimate of the output density",
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "tanh" => Ok(ScoreKind::Tanh),
            "cube" => Ok(ScoreKind::Cube),
            "identity" => Ok(ScoreKind::Identity),
            "adaptive" => Ok(ScoreKind::Adaptive),
            other => Err(Error::InvalidConfig(format!(
                "unknown score '{other}' (expected tanh, cube, identity or adaptive)"
            ))),
        }
    }
}

/// A score function for one channel. An adaptive model with no table yet
/// behaves as the Gaussian score.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreModel {
    kind: ScoreKind,
    table: Option<ScoreTable>,
}

impl ScoreModel {
    pub fn new(kind: ScoreKind) -> Self {
        Self { kind, table: None }
    }

    /// Adaptive model fitted to `x`.
    pub fn fitted(x: &[f64]) -> Result<Self> {
        let mut m = Self::new(ScoreKind::Adaptive);
        m.refit(x)?;
        Ok(m)
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn density_name(&self) -> &'static str {
        self.kind.density_name()
    }

    pub fn table(&self) -> Option<&ScoreTable> {
        self.table.as_ref()
    }

    /// Re-estimates an adaptive table from `x`; no-op for fixed models.
    pub fn refit(&mut self, x: &[f64]) -> Result<()> {
        if self.kind == ScoreKind::Adaptive {
            self.table = Some(score_table(x, DEFAULT_SCORE_BINS)?);
        }
        Ok(())
    }

    pub fn psi(&self, s: f64) -> f64 {
        match self.kind {
            ScoreKind::Tanh => s.tanh(),
            ScoreKind::Cube => s * s * s,
            ScoreKind::Identity => s,
            ScoreKind::Adaptive => match &self.table {
                Some(t) => t.eval(s),
                None => s,
            },
        }
    }
}

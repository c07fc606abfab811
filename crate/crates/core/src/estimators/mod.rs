//! Sample-based estimators: scalar entropy and non-Gaussianity, mutual
//! information for two or three channels, and nonparametric score tables.

pub mod entropy;
mod knn;
pub mod mi;
pub mod score;

pub use entropy::{
    entropy_scalar, negentropy_scalar, negentropy_standard_error, negentropy_with, EntropyEstimate,
    EntropyMethod, EntropyMethodKind, NegentropyEstimate,
};
pub use mi::{mutual_information, MiEstimate, MiMethod, MiMethodKind};
pub use score::{score_table, ScoreTable, DEFAULT_SCORE_BINS, MIN_SCORE_SAMPLES};

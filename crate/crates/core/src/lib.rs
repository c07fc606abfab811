pub mod dataset;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod source;
pub mod estimators;
pub mod eval;
pub mod ica;
pub mod oracle;

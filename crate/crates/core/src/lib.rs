pub mod dataset;
pub mod error;
pub mod experiment;
pub mod fairness;
pub mod metrics;
pub mod recommenders;
pub mod similarity;

pub use error::{Error, Result};

//! Experiment driver for `margin-cma`: configuration, trial execution,
//! aggregation and CSV output behind the `mi-bench` binary.

pub mod aggregate;
pub mod config;
pub mod error;
pub mod mo_run;
pub mod output;
pub mod sweep;
pub mod trial;

pub use config::{Algorithm, ExperimentConfig};
pub use error::HarnessError;

//! Experiment harness for label-shift corrections: β sweeps over datasets,
//! models, corrections and seeds; shifted-dataset generation; report
//! aggregation.

pub mod config;
pub mod error;
pub mod harness;
pub mod report;
pub mod seed;
pub mod shiftgen;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use harness::{run, ExperimentReport, Record};

//! Label-shift correction for probabilistic classifiers.
//!
//! A classifier trained under one class prior is evaluated under another.
//! This crate provides the test-time posterior adjustments (DistPFN,
//! DistPFN-T, prior ratio, EM and black-box prior estimation), three base
//! models, the shift benchmark (inverse-frequency oversampling), metrics and
//! CSV handling used to compare them.

pub mod adjust;
pub mod data;
pub mod distribution;
pub mod error;
pub mod metrics;
pub mod models;
pub mod posterior;
pub mod shiftbench;
pub mod synth;

pub use adjust::{AdjustmentSpec, ConfusionMatrix, Method, NumeratorMode};
pub use data::{Dataset, LabelColumn, PreprocessStats, RawTable};
pub use distribution::{CategoricalDistribution, Temperature};
pub use error::{Error, Result};
pub use metrics::EvaluationResult;
pub use models::{FittedModel, ModelKind, ModelSpec};
pub use posterior::PosteriorMatrix;
pub use shiftbench::{ShiftConfig, SplitSpec};
pub use synth::GaussianMixtureSpec;

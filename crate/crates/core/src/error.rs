use thiserror::Error;

/// Errors raised by the label-shift toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("all weights are zero")]
    AllZero,
    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("a categorical distribution needs at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("prior entry for class {class} is zero")]
    ZeroPrior { class: usize },
    #[error("class {class} has zero probability")]
    ZeroClassProbability { class: usize },
    #[error("label list is empty")]
    EmptyLabels,
    #[error("label {label} is out of range for {classes} classes")]
    OutOfRangeLabel { label: usize, classes: usize },
    #[error("posterior matrix is empty")]
    EmptyMatrix,
    #[error("training set is empty")]
    EmptyTrain,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("linear system is singular (condition ratio {ratio:e})")]
    SingularSystem { ratio: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("dataset with {0} instances is too small to split")]
    TooSmall(usize),
    #[error("class {class} is absent; balance ratio undefined")]
    AbsentClass { class: usize },
    #[error("score table is ragged: method {method} has {actual} scores, expected {expected}")]
    RaggedTable {
        method: String,
        expected: usize,
        actual: usize,
    },
    #[error("invalid model specification: {0}")]
    InvalidModelSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error at row {row}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        row: usize,
        column: Option<usize>,
        message: String,
    },
    #[error("label column {0} not found")]
    MissingLabelColumn(String),
    #[error("no feature columns")]
    EmptyFeatures,
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

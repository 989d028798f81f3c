//! Probabilistic base classifiers behind one contract: fit on a [`Dataset`],
//! emit a [`PosteriorMatrix`] over the same classes.

mod gnb;
mod knn;
mod logistic;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

pub use gnb::{GaussianNb, VARIANCE_FLOOR};
pub use knn::KnnModel;
pub use logistic::{objective_and_gradient, LogisticRegression};

use crate::data::Dataset;
use crate::distribution::{class_counts, CategoricalDistribution};
use crate::error::{Error, Result};
use crate::posterior::PosteriorMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Knn,
    GaussianNb,
    LogisticRegression,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Knn => "knn",
            ModelKind::GaussianNb => "gaussian_nb",
            ModelKind::LogisticRegression => "logistic_regression",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnWeighting {
    #[default]
    Uniform,
    InverseDistance,
}

/// Which classifier to fit and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub knn_k: usize,
    pub knn_weighting: KnnWeighting,
    /// Per-class additive smoothing of kNN vote fractions.
    pub knn_smoothing: f64,
    pub lr_learning_rate: f64,
    pub lr_epochs: usize,
    pub lr_l2: f64,
    pub seed: u64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            kind: ModelKind::Knn,
            knn_k: 10,
            knn_weighting: KnnWeighting::Uniform,
            knn_smoothing: 1e-6,
            lr_learning_rate: 0.1,
            lr_epochs: 500,
            lr_l2: 1e-4,
            seed: 0,
        }
    }
}

impl ModelSpec {
    pub fn knn(k: usize) -> Self {
        Self {
            kind: ModelKind::Knn,
            knn_k: k,
            ..Self::default()
        }
    }

    pub fn gaussian_nb() -> Self {
        Self {
            kind: ModelKind::GaussianNb,
            ..Self::default()
        }
    }

    pub fn logistic_regression() -> Self {
        Self {
            kind: ModelKind::LogisticRegression,
            ..Self::default()
        }
    }
}

/// A trained classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Knn(KnnModel),
    GaussianNb(GaussianNb),
    LogisticRegression(LogisticRegression),
}

impl FittedModel {
    pub fn n_classes(&self) -> usize {
        match self {
            FittedModel::Knn(m) => m.n_classes(),
            FittedModel::GaussianNb(m) => m.n_classes(),
            FittedModel::LogisticRegression(m) => m.n_classes(),
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            FittedModel::Knn(m) => m.n_features(),
            FittedModel::GaussianNb(m) => m.n_features(),
            FittedModel::LogisticRegression(m) => m.n_features(),
        }
    }
}

/// Checks shared preconditions and returns per-class counts.
pub(crate) fn check_training_set(train: &Dataset) -> Result<Vec<usize>> {
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    let counts = class_counts(&train.labels, train.n_classes)?;
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::SingleClass);
    }
    Ok(counts)
}

pub(crate) fn check_query(expected: usize, features: &ArrayView2<'_, f64>) -> Result<()> {
    if features.ncols() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: features.ncols(),
        });
    }
    Ok(())
}

/// Trains the classifier described by `spec` on `train`.
pub fn fit(spec: &ModelSpec, train: &Dataset) -> Result<FittedModel> {
    Ok(match spec.kind {
        ModelKind::Knn => FittedModel::Knn(KnnModel::fit(spec, train)?),
        ModelKind::GaussianNb => FittedModel::GaussianNb(GaussianNb::fit(train)?),
        ModelKind::LogisticRegression => {
            FittedModel::LogisticRegression(LogisticRegression::fit(spec, train)?)
        }
    })
}

/// Class posteriors for every row of `features`.
pub fn predict_posteriors(model: &FittedModel, features: ArrayView2<'_, f64>) -> Result<PosteriorMatrix> {
    match model {
        FittedModel::Knn(m) => m.predict_posteriors(features),
        FittedModel::GaussianNb(m) => m.predict_posteriors(features),
        FittedModel::LogisticRegression(m) => m.predict_posteriors(features),
    }
}

/// Column mean of a posterior matrix.
pub fn mean_posterior(posteriors: &PosteriorMatrix) -> Result<CategoricalDistribution> {
    posteriors.mean()
}

/// Numerically stable softmax in place.
pub(crate) fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in values.iter_mut() {
        *v = if v.is_finite() { (*v - max).exp() } else { 0.0 };
        sum += *v;
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
}

use nalgebra::{DMatrix, DVector};

use super::prior_ratio_adjust;
use crate::data::Dataset;
use crate::distribution::{empirical_label_distribution, normalize, CategoricalDistribution};
use crate::error::{Error, Result};
use crate::models::{fit, predict_posteriors, FittedModel, ModelSpec};
use crate::posterior::PosteriorMatrix;
use crate::shiftbench::{split_indices, SplitSpec};

/// Systems whose smallest-to-largest singular value ratio falls below this
/// are rejected as singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-10;

/// Share of the training set held out to estimate the confusion matrix.
pub const CONFUSION_HOLDOUT: f64 = 0.2;

/// `entry(s, y) = P(predicted = s | true = y)`. Columns sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    entries: DMatrix<f64>,
}

impl ConfusionMatrix {
    /// Builds from per-true-class columns.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let c = columns.len();
        if c < 2 {
            return Err(Error::TooFewClasses(c));
        }
        for col in columns {
            if col.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    actual: col.len(),
                });
            }
            // rejects negatives and non-finite entries and checks the sum
            CategoricalDistribution::new(col.clone())?;
        }
        Ok(Self {
            entries: DMatrix::from_fn(c, c, |s, y| columns[y][s]),
        })
    }

    /// Estimates the matrix from held-out predictions. A class without
    /// held-out rows gets an identity column.
    pub fn from_predictions(predictions: &[usize], labels: &[usize], classes: usize) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                actual: predictions.len(),
            });
        }
        if labels.is_empty() {
            return Err(Error::EmptyLabels);
        }
        if classes < 2 {
            return Err(Error::TooFewClasses(classes));
        }
        let mut counts = DMatrix::<f64>::zeros(classes, classes);
        for (&s, &y) in predictions.iter().zip(labels) {
            for v in [s, y] {
                if v >= classes {
                    return Err(Error::OutOfRangeLabel { label: v, classes });
                }
            }
            counts[(s, y)] += 1.0;
        }
        for y in 0..classes {
            let total: f64 = counts.column(y).sum();
            if total == 0.0 {
                counts[(y, y)] = 1.0;
            } else {
                counts.column_mut(y).unscale_mut(total);
            }
        }
        Ok(Self { entries: counts })
    }

    pub fn n_classes(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, predicted: usize, truth: usize) -> f64 {
        self.entries[(predicted, truth)]
    }

    /// `σ_min / σ_max`.
    pub fn condition_ratio(&self) -> f64 {
        let sv = self.entries.singular_values();
        let max = sv.max();
        if max == 0.0 {
            0.0
        } else {
            sv.min() / max
        }
    }
}

/// Fits `model` on a stratified 80% of `train` and estimates the confusion
/// matrix from its hard predictions on the remaining 20%.
pub fn holdout_confusion(train: &Dataset, model: &ModelSpec, seed: u64) -> Result<(FittedModel, ConfusionMatrix)> {
    let spec = SplitSpec {
        train_fraction: 1.0 - CONFUSION_HOLDOUT,
        seed,
        stratified: true,
    };
    let (fit_idx, held_idx) = split_indices(&train.labels, &spec)?;
    let held = train.select(&held_idx);
    let fitted = fit(model, &train.select(&fit_idx))?;
    let predictions = predict_posteriors(&fitted, held.features.view())?.predictions();
    let confusion = ConfusionMatrix::from_predictions(&predictions, &held.labels, train.n_classes)?;
    Ok((fitted, confusion))
}

/// Distribution of hard predictions.
pub fn predicted_label_distribution(posteriors: &PosteriorMatrix) -> Result<CategoricalDistribution> {
    empirical_label_distribution(&posteriors.predictions(), posteriors.n_classes(), 0.0)
}

/// Solves `C · π = q` for the test prior `π`, where `q` is the predicted
/// label distribution on the test set. Negative components are clipped to
/// zero and the result renormalized.
pub fn bbe_estimate_prior(
    confusion: &ConfusionMatrix,
    predicted: &CategoricalDistribution,
) -> Result<CategoricalDistribution> {
    let c = confusion.n_classes();
    if predicted.len() != c {
        return Err(Error::DimensionMismatch {
            expected: c,
            actual: predicted.len(),
        });
    }
    let ratio = confusion.condition_ratio();
    if ratio.is_nan() || ratio < SINGULAR_TOLERANCE {
        return Err(Error::SingularSystem { ratio });
    }
    let rhs = DVector::from_column_slice(predicted.as_slice());
    let solution = confusion
        .entries
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularSystem { ratio })?;
    let clipped: Vec<f64> = solution.iter().map(|&v| v.max(0.0)).collect();
    normalize(&clipped)
}

/// Prior-ratio correction with the BBE estimate as the target.
pub fn bbe_adjust(
    posteriors: &PosteriorMatrix,
    train_prior: &CategoricalDistribution,
    confusion: &ConfusionMatrix,
    predicted: &CategoricalDistribution,
) -> Result<PosteriorMatrix> {
    let target = bbe_estimate_prior(confusion, predicted)?;
    prior_ratio_adjust(posteriors, train_prior, &target)
}

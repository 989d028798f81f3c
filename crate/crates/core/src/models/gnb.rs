use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2};

use super::{check_query, check_training_set, softmax_in_place};
use crate::data::Dataset;
use crate::distribution::{empirical_label_distribution, CategoricalDistribution};
use crate::error::{Error, Result};
use crate::posterior::PosteriorMatrix;

/// Added to every per-class feature variance.
pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes with diagonal class-conditional variances.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNb {
    means: Array2<f64>,
    variances: Array2<f64>,
    prior: CategoricalDistribution,
}

impl GaussianNb {
    /// Per-class means, population variances plus floor, and the empirical
    /// class prior. Classes absent from `train` keep prior 0.
    pub fn fit(train: &Dataset) -> Result<Self> {
        let counts = check_training_set(train)?;
        let (c, d) = (train.n_classes, train.n_features());
        let mut means = Array2::<f64>::zeros((c, d));
        for (row, &y) in train.features.rows().into_iter().zip(&train.labels) {
            let mut m = means.row_mut(y);
            m += &row;
        }
        for (k, &n) in counts.iter().enumerate() {
            if n > 0 {
                means.row_mut(k).mapv_inplace(|v| v / n as f64);
            }
        }
        let mut variances = Array2::<f64>::zeros((c, d));
        for (row, &y) in train.features.rows().into_iter().zip(&train.labels) {
            let diff = &row - &means.row(y);
            let mut v = variances.row_mut(y);
            v += &(&diff * &diff);
        }
        for (k, &n) in counts.iter().enumerate() {
            let denom = n.max(1) as f64;
            variances
                .row_mut(k)
                .mapv_inplace(|v| if n > 0 { v / denom + VARIANCE_FLOOR } else { 1.0 });
        }
        let prior = empirical_label_distribution(&train.labels, c, 0.0)?;
        Ok(Self {
            means,
            variances,
            prior,
        })
    }

    /// Builds a model from explicit parameters.
    pub fn from_parameters(
        means: Array2<f64>,
        variances: Array2<f64>,
        prior: CategoricalDistribution,
    ) -> Result<Self> {
        if means.dim() != variances.dim() {
            return Err(Error::DimensionMismatch {
                expected: means.len(),
                actual: variances.len(),
            });
        }
        if means.nrows() != prior.len() {
            return Err(Error::DimensionMismatch {
                expected: means.nrows(),
                actual: prior.len(),
            });
        }
        if variances.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidModelSpec("variances must be positive".into()));
        }
        Ok(Self {
            means,
            variances,
            prior,
        })
    }

    /// Same class-conditionals, different class prior.
    pub fn with_prior(&self, prior: CategoricalDistribution) -> Result<Self> {
        if prior.len() != self.n_classes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_classes(),
                actual: prior.len(),
            });
        }
        Ok(Self {
            prior,
            ..self.clone()
        })
    }

    pub fn n_classes(&self) -> usize {
        self.means.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.means.ncols()
    }

    pub fn prior(&self) -> &CategoricalDistribution {
        &self.prior
    }

    pub fn means(&self) -> &Array2<f64> {
        &self.means
    }

    pub fn variances(&self) -> &Array2<f64> {
        &self.variances
    }

    /// `ln p(x | y = c)` for every class.
    pub fn log_likelihoods(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_classes())
            .map(|c| {
                x.iter()
                    .zip(self.means.row(c))
                    .zip(self.variances.row(c))
                    .map(|((xf, mu), var)| -0.5 * (2.0 * PI * var).ln() - (xf - mu).powi(2) / (2.0 * var))
                    .sum()
            })
            .collect()
    }

    pub fn predict_posteriors(&self, features: ArrayView2<'_, f64>) -> Result<PosteriorMatrix> {
        check_query(self.n_features(), &features)?;
        let mut out = Array2::zeros((features.nrows(), self.n_classes()));
        for (x, mut row) in features.rows().into_iter().zip(out.rows_mut()) {
            let x = x.to_vec();
            let mut logits: Vec<f64> = self
                .log_likelihoods(&x)
                .into_iter()
                .zip(self.prior.iter())
                .map(|(ll, &p)| if p > 0.0 { ll + p.ln() } else { f64::NEG_INFINITY })
                .collect();
            softmax_in_place(&mut logits);
            row.assign(&ndarray::ArrayView1::from(&logits[..]));
        }
        Ok(PosteriorMatrix::from_normalized(out))
    }
}

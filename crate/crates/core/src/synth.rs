//! Gaussian class-conditional data with closed-form Bayes posteriors.
//!
//! The class-conditionals stay fixed while the prior is swapped, which is
//! exactly the label-shift setting; the posteriors here are the oracle for
//! the correction rules in [`crate::adjust`].

use std::f64::consts::PI;

use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::distribution::{CategoricalDistribution, normalize};
use crate::error::{Error, Result};
use crate::models::GaussianNb;

/// Diagonal variances, shared across classes or per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variances {
    Shared(Vec<f64>),
    PerClass(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixtureSpec {
    pub means: Vec<Vec<f64>>,
    pub variances: Variances,
    pub prior: CategoricalDistribution,
    #[serde(default)]
    pub seed: u64,
}

impl GaussianMixtureSpec {
    /// Two classes at (−1, −1) and (+1, +1) with unit variances.
    pub fn fixture(prior: CategoricalDistribution, seed: u64) -> Self {
        Self {
            means: vec![vec![-1.0, -1.0], vec![1.0, 1.0]],
            variances: Variances::Shared(vec![1.0, 1.0]),
            prior,
            seed,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.means.len()
    }

    pub fn n_features(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn with_prior(&self, prior: CategoricalDistribution) -> Self {
        Self {
            prior,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn variance(&self, class: usize, feature: usize) -> f64 {
        match &self.variances {
            Variances::Shared(v) => v[feature],
            Variances::PerClass(v) => v[class][feature],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (c, d) = (self.n_classes(), self.n_features());
        if c < 2 {
            return Err(Error::TooFewClasses(c));
        }
        if self.prior.len() != c {
            return Err(Error::DimensionMismatch {
                expected: c,
                actual: self.prior.len(),
            });
        }
        if let Some(m) = self.means.iter().find(|m| m.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: m.len(),
            });
        }
        let rows: Vec<&Vec<f64>> = match &self.variances {
            Variances::Shared(v) => vec![v],
            Variances::PerClass(v) => {
                if v.len() != c {
                    return Err(Error::DimensionMismatch {
                        expected: c,
                        actual: v.len(),
                    });
                }
                v.iter().collect()
            }
        };
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
            if row.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidConfig("variances must be positive".into()));
            }
        }
        Ok(())
    }

    /// Draws a class from the prior, then each feature from that class's
    /// Gaussian.
    pub fn sample(&self, n: usize) -> Result<Dataset> {
        self.validate()?;
        let d = self.n_features();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let classes =
            WeightedIndex::new(self.prior.as_slice()).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let mut features = Array2::zeros((n, d));
        let mut labels = Vec::with_capacity(n);
        for mut row in features.rows_mut() {
            let y = classes.sample(&mut rng);
            for (f, slot) in row.iter_mut().enumerate() {
                let normal = Normal::new(self.means[y][f], self.variance(y, f).sqrt())
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?;
                *slot = normal.sample(&mut rng);
            }
            labels.push(y);
        }
        Dataset::from_numeric(features, labels, self.n_classes())
    }

    /// `Norm(prior_c · Π_f N(x_f; μ_cf, σ²_cf))`, evaluated in log space.
    pub fn bayes_posterior(&self, x: &[f64]) -> Result<CategoricalDistribution> {
        self.validate()?;
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.len(),
            });
        }
        let logs: Vec<f64> = (0..self.n_classes())
            .map(|c| {
                if self.prior[c] == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let ll: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(f, xf)| {
                        let var = self.variance(c, f);
                        -0.5 * (2.0 * PI * var).ln() - (xf - self.means[c][f]).powi(2) / (2.0 * var)
                    })
                    .sum();
                ll + self.prior[c].ln()
            })
            .collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        normalize(&weights)
    }

    /// The naive Bayes model whose posteriors equal [`Self::bayes_posterior`].
    pub fn to_gaussian_nb(&self) -> Result<GaussianNb> {
        self.validate()?;
        let (c, d) = (self.n_classes(), self.n_features());
        let means = Array2::from_shape_fn((c, d), |(k, f)| self.means[k][f]);
        let variances = Array2::from_shape_fn((c, d), |(k, f)| self.variance(k, f));
        GaussianNb::from_parameters(means, variances, self.prior.clone())
    }
}

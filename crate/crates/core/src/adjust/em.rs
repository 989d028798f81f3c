use serde::{Deserialize, Serialize};

use super::{check_prior, prior_ratio_adjust};
use crate::distribution::CategoricalDistribution;
use crate::error::{Error, Result};
use crate::posterior::PosteriorMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmOutcome {
    pub prior: CategoricalDistribution,
    /// Test posteriors corrected with the final prior.
    pub adjusted: PosteriorMatrix,
    pub iterations: usize,
}

/// Expectation-maximization estimate of the test prior.
///
/// Starts from the training prior. Each step reweights the test posteriors
/// by `π / π_train`, renormalizes, and takes the column mean as the next `π`.
/// Stops once the L1 change drops below `tol` or after `max_iter` steps.
pub fn em_estimate_prior(
    posteriors: &PosteriorMatrix,
    train_prior: &CategoricalDistribution,
    max_iter: usize,
    tol: f64,
) -> Result<EmOutcome> {
    check_prior(train_prior, posteriors.n_classes())?;
    if posteriors.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if max_iter == 0 {
        return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidConfig("tol must be >= 0".into()));
    }
    let mut prior = train_prior.clone();
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let next = prior_ratio_adjust(posteriors, train_prior, &prior)?.mean()?;
        let change: f64 = next.iter().zip(prior.iter()).map(|(a, b)| (a - b).abs()).sum();
        prior = next;
        if change < tol {
            break;
        }
    }
    let adjusted = prior_ratio_adjust(posteriors, train_prior, &prior)?;
    Ok(EmOutcome {
        prior,
        adjusted,
        iterations,
    })
}

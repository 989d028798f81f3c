//! Controlled label shift: inverse-frequency oversampling of a training
//! split, seeded train/test splits, and dataset-level shift diagnostics.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::distribution::{
    class_counts, empirical_label_distribution, kl_divergence, CategoricalDistribution,
};
use crate::error::{Error, Result};

/// Smoothing used by [`label_shift_kl`] when the caller has no preference.
pub const DEFAULT_KL_SMOOTHING: f64 = 1e-6;

/// Oversampling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftConfig {
    pub beta: f64,
    pub target_size: usize,
    pub seed: u64,
}

impl ShiftConfig {
    pub fn new(beta: f64, target_size: usize, seed: u64) -> Result<Self> {
        let config = Self {
            beta,
            target_size,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "beta must be finite and >= 0, got {}",
                self.beta
            )));
        }
        if self.target_size == 0 {
            return Err(Error::InvalidConfig("target_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// `w̃_k ∝ p_k^{-β}`, computed in log space.
pub fn inverse_frequency_weights(
    class_probs: &CategoricalDistribution,
    beta: f64,
) -> Result<CategoricalDistribution> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "beta must be finite and >= 0, got {beta}"
        )));
    }
    if let Some(class) = class_probs.iter().position(|&p| p <= 0.0) {
        return Err(Error::ZeroClassProbability { class });
    }
    let logs: Vec<f64> = class_probs.iter().map(|p| -beta * p.ln()).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    crate::distribution::normalize(&weights)
}

/// Row indices drawn by two-stage sampling: a class from the
/// inverse-frequency weights, then a uniform instance of that class.
pub fn oversample_indices(labels: &[usize], n_classes: usize, config: &ShiftConfig) -> Result<Vec<usize>> {
    config.validate()?;
    if labels.is_empty() {
        return Err(Error::EmptyTrain);
    }
    let prior = empirical_label_distribution(labels, n_classes, 0.0)?;
    let weights = inverse_frequency_weights(&prior, config.beta)?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &label) in labels.iter().enumerate() {
        members[label].push(i);
    }
    let class_dist =
        WeightedIndex::new(weights.as_slice()).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    Ok((0..config.target_size)
        .map(|_| {
            let class = class_dist.sample(&mut rng);
            let pool = &members[class];
            pool[rng.random_range(0..pool.len())]
        })
        .collect())
}

/// Resamples `train` so its label marginal follows the inverse-frequency
/// weights at strength `beta`. Every output row is a copy of an input row.
pub fn oversample(train: &Dataset, config: &ShiftConfig) -> Result<Dataset> {
    let indices = oversample_indices(&train.labels, train.n_classes, config)?;
    Ok(train.select(&indices))
}

/// Train/test partition parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.5,
            seed: 0,
            stratified: false,
        }
    }
}

fn take_count(n: usize, fraction: f64) -> usize {
    ((n as f64) * fraction).round() as usize
}

/// Seeded partition of `0..labels.len()`; both halves come back sorted.
pub fn split_indices(labels: &[usize], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = labels.len();
    if n < 2 {
        return Err(Error::TooSmall(n));
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train_fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (mut train, mut test) = if spec.stratified {
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
        for (i, &l) in labels.iter().enumerate() {
            groups[l].push(i);
        }
        let mut train = Vec::new();
        let mut test = Vec::new();
        for mut group in groups {
            group.shuffle(&mut rng);
            let k = take_count(group.len(), spec.train_fraction);
            train.extend_from_slice(&group[..k]);
            test.extend_from_slice(&group[k..]);
        }
        (train, test)
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let k = take_count(n, spec.train_fraction).clamp(1, n - 1);
        let test = order.split_off(k);
        (order, test)
    };
    // per-class rounding can empty one side on tiny inputs
    if train.is_empty() {
        train.push(test.pop().expect("n >= 2"));
    } else if test.is_empty() {
        test.push(train.pop().expect("n >= 2"));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Seeded train/test split of a dataset.
pub fn split_fixed(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(&dataset.labels, spec)?;
    Ok((dataset.select(&train), dataset.select(&test)))
}

/// Minority count over majority count.
pub fn balance_ratio(labels: &[usize], n_classes: usize) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptyLabels);
    }
    let counts = class_counts(labels, n_classes)?;
    if let Some(class) = counts.iter().position(|&c| c == 0) {
        return Err(Error::AbsentClass { class });
    }
    let min = *counts.iter().min().expect("n_classes > 0");
    let max = *counts.iter().max().expect("n_classes > 0");
    Ok(min as f64 / max as f64)
}

/// `KL(test ‖ train)` between smoothed empirical label distributions.
pub fn label_shift_kl(
    train_labels: &[usize],
    test_labels: &[usize],
    n_classes: usize,
    epsilon: f64,
) -> Result<f64> {
    let train = empirical_label_distribution(train_labels, n_classes, epsilon)?;
    let test = empirical_label_distribution(test_labels, n_classes, epsilon)?;
    kl_divergence(&test, &train)
}

//! Categorical probability vectors and the divergences used to compare them.
//!
//! Everything here is a pure function of its inputs. Logarithms of the
//! second argument of a divergence are taken after clamping to
//! [`LOG_EPSILON`], so priors with empty classes stay finite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clamp applied to the second argument of `ln` inside CE and KL.
pub const LOG_EPSILON: f64 = 1e-12;

/// Tolerance on the sum of a validated distribution.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A probability vector over `C >= 2` classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CategoricalDistribution {
    probs: Vec<f64>,
}

impl CategoricalDistribution {
    /// Validates an already-normalized probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_weights(&probs)?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidConfig(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::TooFewClasses(classes));
        }
        Ok(Self {
            probs: vec![1.0 / classes as f64; classes],
        })
    }

    /// Wraps a vector the caller has just normalized. Not exported: every
    /// public constructor validates.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        debug_assert!(probs.len() >= 2);
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.probs.iter()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }

    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }
}

impl std::ops::Index<usize> for CategoricalDistribution {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.probs[index]
    }
}

impl TryFrom<Vec<f64>> for CategoricalDistribution {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<CategoricalDistribution> for Vec<f64> {
    fn from(value: CategoricalDistribution) -> Self {
        value.probs
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.len() < 2 {
        return Err(Error::TooFewClasses(weights.len()));
    }
    for (index, &value) in weights.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if value < 0.0 {
            return Err(Error::NegativeWeight { index, value });
        }
    }
    Ok(())
}

/// Divides nonnegative weights by their sum.
pub fn normalize(weights: &[f64]) -> Result<CategoricalDistribution> {
    check_weights(weights)?;
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return Err(Error::AllZero);
    }
    Ok(CategoricalDistribution::from_normalized(
        weights.iter().map(|w| w / sum).collect(),
    ))
}

fn check_same_len(p: &CategoricalDistribution, q: &CategoricalDistribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    Ok(())
}

/// `-Σ p_c ln(max(q_c, ε))`. Zero entries of `p` contribute nothing.
pub fn cross_entropy(p: &CategoricalDistribution, q: &CategoricalDistribution) -> Result<f64> {
    check_same_len(p, q)?;
    Ok(p.iter()
        .zip(q.iter())
        .filter(|(&pc, _)| pc > 0.0)
        .map(|(&pc, &qc)| -pc * qc.max(LOG_EPSILON).ln())
        .sum())
}

/// `KL(p‖q) = Σ p ln(p/q)` with `0·ln(0/q) = 0`.
pub fn kl_divergence(p: &CategoricalDistribution, q: &CategoricalDistribution) -> Result<f64> {
    check_same_len(p, q)?;
    Ok(kl_raw(p.as_slice(), q.as_slice()))
}

fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    let kl: f64 = p
        .iter()
        .zip(q)
        .filter(|(&pc, _)| pc > 0.0)
        .map(|(&pc, &qc)| pc * (pc.ln() - qc.max(LOG_EPSILON).ln()))
        .sum();
    // rounding can leave a -1e-17 residue for identical inputs
    kl.max(0.0)
}

/// Jensen-Shannon divergence in nats.
pub fn js_divergence(p: &CategoricalDistribution, q: &CategoricalDistribution) -> Result<f64> {
    check_same_len(p, q)?;
    let m: Vec<f64> = p.iter().zip(q.iter()).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok(0.5 * kl_raw(p.as_slice(), &m) + 0.5 * kl_raw(q.as_slice(), &m))
}

/// Euclidean norm of `p - q`.
pub fn l2_distance(p: &CategoricalDistribution, q: &CategoricalDistribution) -> Result<f64> {
    check_same_len(p, q)?;
    Ok(p.iter()
        .zip(q.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// A softmax temperature, clamped into `[MIN, MAX]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Temperature(f64);

impl Temperature {
    pub const MIN: f64 = 1e-3;
    pub const MAX: f64 = 1e3;

    /// Clamps `tau` into range. NaN maps to `MIN`.
    pub fn new(tau: f64) -> Self {
        if tau.is_nan() {
            return Self(Self::MIN);
        }
        Self(tau.clamp(Self::MIN, Self::MAX))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<f64> for Temperature {
    fn from(tau: f64) -> Self {
        Self::new(tau)
    }
}

impl From<Temperature> for f64 {
    fn from(t: Temperature) -> Self {
        t.0
    }
}

/// Softmax of the probability vector itself divided by `tau`.
pub fn temperature_softmax(p: &CategoricalDistribution, tau: Temperature) -> CategoricalDistribution {
    let t = tau.value();
    let max = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = p.iter().map(|&pc| ((pc - max) / t).exp()).collect();
    let sum: f64 = exps.iter().sum();
    CategoricalDistribution::from_normalized(exps.into_iter().map(|e| e / sum).collect())
}

/// Smoothed class frequencies `(count_k + ε) / (N + C·ε)`.
pub fn empirical_label_distribution(
    labels: &[usize],
    classes: usize,
    epsilon: f64,
) -> Result<CategoricalDistribution> {
    if classes < 2 {
        return Err(Error::TooFewClasses(classes));
    }
    if labels.is_empty() {
        return Err(Error::EmptyLabels);
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "smoothing must be finite and nonnegative, got {epsilon}"
        )));
    }
    let counts = class_counts(labels, classes)?;
    let denom = labels.len() as f64 + classes as f64 * epsilon;
    Ok(CategoricalDistribution::from_normalized(
        counts.iter().map(|&c| (c as f64 + epsilon) / denom).collect(),
    ))
}

/// Per-class counts; fails on labels outside `[0, classes)`.
pub fn class_counts(labels: &[usize], classes: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; classes];
    for &label in labels {
        if label >= classes {
            return Err(Error::OutOfRangeLabel { label, classes });
        }
        counts[label] += 1;
    }
    Ok(counts)
}

//! Test-time posterior adjustment under label shift.
//!
//! DistPFN multiplies each posterior by `p̂ / prior` and renormalizes, where
//! `p̂` is either the row itself or the mean posterior over the test set.
//! DistPFN-T first passes `p̂` through a temperature softmax whose
//! temperature is the divergence between `p̂` and the prior. The classical
//! corrections (prior ratio, EM, black-box estimation) live alongside for
//! comparison.

mod bbe;
mod cv;
mod em;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use bbe::{
    bbe_adjust, bbe_estimate_prior, holdout_confusion, predicted_label_distribution, ConfusionMatrix,
    CONFUSION_HOLDOUT, SINGULAR_TOLERANCE,
};
pub use cv::{cv_select_temperature, DEFAULT_TAU_GRID};
pub use em::{em_estimate_prior, EmOptions, EmOutcome};

use crate::distribution::{
    cross_entropy, js_divergence, kl_divergence, l2_distance, normalize, temperature_softmax,
    CategoricalDistribution, Temperature,
};
use crate::error::{Error, Result};
use crate::posterior::PosteriorMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    None,
    #[serde(rename = "distpfn")]
    DistPfn,
    #[serde(rename = "distpfn_t")]
    DistPfnT,
    PriorRatio,
    Eme,
    Bbe,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::DistPfn => "distpfn",
            Method::DistPfnT => "distpfn_t",
            Method::PriorRatio => "prior_ratio",
            Method::Eme => "eme",
            Method::Bbe => "bbe",
        }
    }
}

/// Source of the numerator `p̂` in the adjustment factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumeratorMode {
    /// Each row's own posterior.
    PerInstance,
    /// Column mean of all test posteriors, shared by every row.
    #[default]
    TestAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauMetric {
    #[default]
    CrossEntropy,
    Kl,
    Js,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CeDirection {
    /// `CE(p̂, prior)`.
    #[default]
    PredFirst,
    /// `CE(prior, p̂)`.
    PriorFirst,
}

/// Denominator of the adjustment factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferencePrior {
    /// Empirical label distribution of the training set.
    #[default]
    TrainLabels,
    /// Mean predicted posterior over the training set.
    TrainPrediction,
}

/// Which correction to apply and how.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AdjustmentSpec {
    pub method: Method,
    pub numerator_mode: NumeratorMode,
    pub tau_metric: TauMetric,
    pub ce_direction: CeDirection,
    pub reference_prior: ReferencePrior,
    /// Overrides the divergence-based temperature of DistPFN-T.
    pub fixed_tau: Option<Temperature>,
}

impl AdjustmentSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn per_instance(mut self) -> Self {
        self.numerator_mode = NumeratorMode::PerInstance;
        self
    }
}

pub(crate) fn check_prior(prior: &CategoricalDistribution, classes: usize) -> Result<()> {
    if prior.len() != classes {
        return Err(Error::DimensionMismatch {
            expected: classes,
            actual: prior.len(),
        });
    }
    if let Some(class) = prior.iter().position(|&p| p <= 0.0) {
        return Err(Error::ZeroPrior { class });
    }
    Ok(())
}

/// `Norm(row ⊙ factor(row))` for every row.
pub(crate) fn reweight<F>(posteriors: &PosteriorMatrix, mut factor: F) -> Result<PosteriorMatrix>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let c = posteriors.n_classes();
    let mut out = Array2::zeros((posteriors.n_rows(), c));
    for (row, mut dst) in posteriors.rows().zip(out.rows_mut()) {
        let alpha = factor(row)?;
        let weighted: Vec<f64> = row.iter().zip(&alpha).map(|(p, a)| p * a).collect();
        let normalized = normalize(&weighted)?;
        dst.assign(&ndarray::ArrayView1::from(normalized.as_slice()));
    }
    Ok(PosteriorMatrix::from_normalized(out))
}

/// `α_c = p̂_c / prior_c`, unnormalized.
pub fn adjustment_factor_distpfn(
    posterior: &CategoricalDistribution,
    prior: &CategoricalDistribution,
) -> Result<Vec<f64>> {
    check_prior(prior, posterior.len())?;
    Ok(posterior.iter().zip(prior.iter()).map(|(p, q)| p / q).collect())
}

/// DistPFN: `Norm(p̂_j ⊙ p̂ / prior)` with `p̂` per row or averaged.
pub fn distpfn_adjust(
    posteriors: &PosteriorMatrix,
    prior: &CategoricalDistribution,
    mode: NumeratorMode,
) -> Result<PosteriorMatrix> {
    check_prior(prior, posteriors.n_classes())?;
    match mode {
        NumeratorMode::PerInstance => reweight(posteriors, |row| {
            Ok(row.iter().zip(prior.iter()).map(|(p, q)| p / q).collect())
        }),
        NumeratorMode::TestAverage => {
            let alpha = adjustment_factor_distpfn(&posteriors.mean()?, prior)?;
            reweight(posteriors, |_| Ok(alpha.clone()))
        }
    }
}

/// Temperature for DistPFN-T: the chosen divergence between `p̂` and the
/// prior, clamped into the temperature range.
pub fn compute_tau(
    predicted: &CategoricalDistribution,
    prior: &CategoricalDistribution,
    metric: TauMetric,
    direction: CeDirection,
) -> Result<Temperature> {
    let value = match (metric, direction) {
        (TauMetric::CrossEntropy, CeDirection::PredFirst) => cross_entropy(predicted, prior)?,
        (TauMetric::CrossEntropy, CeDirection::PriorFirst) => cross_entropy(prior, predicted)?,
        (TauMetric::Kl, _) => kl_divergence(predicted, prior)?,
        (TauMetric::Js, _) => js_divergence(predicted, prior)?,
        (TauMetric::L2, _) => l2_distance(predicted, prior)?,
    };
    Ok(Temperature::new(value))
}

/// `α = softmax(p̂ / τ) / prior`.
fn tempered_factor(
    predicted: &CategoricalDistribution,
    prior: &CategoricalDistribution,
    spec: &AdjustmentSpec,
) -> Result<Vec<f64>> {
    let tau = match spec.fixed_tau {
        Some(t) => t,
        None => compute_tau(predicted, prior, spec.tau_metric, spec.ce_direction)?,
    };
    let scaled = temperature_softmax(predicted, tau);
    Ok(scaled.iter().zip(prior.iter()).map(|(s, q)| s / q).collect())
}

/// DistPFN-T: DistPFN with the numerator replaced by its temperature-scaled
/// softmax.
pub fn distpfn_t_adjust(
    posteriors: &PosteriorMatrix,
    prior: &CategoricalDistribution,
    spec: &AdjustmentSpec,
) -> Result<PosteriorMatrix> {
    check_prior(prior, posteriors.n_classes())?;
    match spec.numerator_mode {
        NumeratorMode::PerInstance => reweight(posteriors, |row| {
            let predicted = CategoricalDistribution::from_normalized(row.to_vec());
            tempered_factor(&predicted, prior, spec)
        }),
        NumeratorMode::TestAverage => {
            let alpha = tempered_factor(&posteriors.mean()?, prior, spec)?;
            reweight(posteriors, |_| Ok(alpha.clone()))
        }
    }
}

/// `Norm(p̂_j ⊙ target / train)`: the Bayes correction for a known new prior.
pub fn prior_ratio_adjust(
    posteriors: &PosteriorMatrix,
    train_prior: &CategoricalDistribution,
    target_prior: &CategoricalDistribution,
) -> Result<PosteriorMatrix> {
    check_prior(train_prior, posteriors.n_classes())?;
    if target_prior.len() != posteriors.n_classes() {
        return Err(Error::DimensionMismatch {
            expected: posteriors.n_classes(),
            actual: target_prior.len(),
        });
    }
    let ratio: Vec<f64> = target_prior
        .iter()
        .zip(train_prior.iter())
        .map(|(t, q)| t / q)
        .collect();
    reweight(posteriors, |_| Ok(ratio.clone()))
}

/// Everything a correction might need. Unused fields may be `None`.
#[derive(Debug, Clone, Copy)]
pub struct AdjustmentInputs<'a> {
    pub test_posteriors: &'a PosteriorMatrix,
    pub train_prior: &'a CategoricalDistribution,
    /// Posteriors on the training set, for [`ReferencePrior::TrainPrediction`].
    pub train_posteriors: Option<&'a PosteriorMatrix>,
    /// Known test prior, for [`Method::PriorRatio`].
    pub target_prior: Option<&'a CategoricalDistribution>,
    /// Confusion matrix and predicted test label distribution, for
    /// [`Method::Bbe`].
    pub confusion: Option<(&'a ConfusionMatrix, &'a CategoricalDistribution)>,
    pub em: EmOptions,
}

impl<'a> AdjustmentInputs<'a> {
    pub fn new(test_posteriors: &'a PosteriorMatrix, train_prior: &'a CategoricalDistribution) -> Self {
        Self {
            test_posteriors,
            train_prior,
            train_posteriors: None,
            target_prior: None,
            confusion: None,
            em: EmOptions::default(),
        }
    }
}

/// Dispatches `spec` over `inputs`.
pub fn apply(spec: &AdjustmentSpec, inputs: &AdjustmentInputs<'_>) -> Result<PosteriorMatrix> {
    let reference = || -> Result<CategoricalDistribution> {
        match spec.reference_prior {
            ReferencePrior::TrainLabels => Ok(inputs.train_prior.clone()),
            ReferencePrior::TrainPrediction => inputs
                .train_posteriors
                .ok_or_else(|| {
                    Error::InvalidConfig("train_prediction reference needs training posteriors".into())
                })?
                .mean(),
        }
    };
    match spec.method {
        Method::None => Ok(inputs.test_posteriors.clone()),
        Method::DistPfn => distpfn_adjust(inputs.test_posteriors, &reference()?, spec.numerator_mode),
        Method::DistPfnT => distpfn_t_adjust(inputs.test_posteriors, &reference()?, spec),
        Method::PriorRatio => {
            let target = inputs
                .target_prior
                .ok_or_else(|| Error::InvalidConfig("prior_ratio needs a target prior".into()))?;
            prior_ratio_adjust(inputs.test_posteriors, inputs.train_prior, target)
        }
        Method::Eme => Ok(em_estimate_prior(
            inputs.test_posteriors,
            inputs.train_prior,
            inputs.em.max_iter,
            inputs.em.tol,
        )?
        .adjusted),
        Method::Bbe => {
            let (confusion, predicted) = inputs
                .confusion
                .ok_or_else(|| Error::InvalidConfig("bbe needs a confusion matrix".into()))?;
            bbe_adjust(inputs.test_posteriors, inputs.train_prior, confusion, predicted)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dist(v: &[f64]) -> CategoricalDistribution {
        CategoricalDistribution::new(v.to_vec()).unwrap()
    }

    fn single(v: &[f64]) -> PosteriorMatrix {
        PosteriorMatrix::from_rows(&[v.to_vec()]).unwrap()
    }

    #[test]
    fn factor_examples() {
        let a = adjustment_factor_distpfn(&dist(&[0.6, 0.4]), &dist(&[0.8, 0.2])).unwrap();
        assert_abs_diff_eq!(a.as_slice(), &[0.75, 2.0][..], epsilon = 1e-15);
        let p = dist(&[0.3, 0.7]);
        assert_eq!(adjustment_factor_distpfn(&p, &p).unwrap(), vec![1.0, 1.0]);
        assert_eq!(
            adjustment_factor_distpfn(&p, &dist(&[1.0, 0.0])),
            Err(Error::ZeroPrior { class: 1 })
        );
    }

    #[test]
    fn distpfn_table_cases() {
        let prior = dist(&[0.8, 0.2]);
        for mode in [NumeratorMode::PerInstance, NumeratorMode::TestAverage] {
            let out = distpfn_adjust(&single(&[0.6, 0.4]), &prior, mode).unwrap();
            assert_abs_diff_eq!(out.row(0), &[0.36, 0.64][..], epsilon = 1e-12);
            let out = distpfn_adjust(&single(&[0.4, 0.6]), &prior, mode).unwrap();
            assert_abs_diff_eq!(out.row(0), &[0.1, 0.9][..], epsilon = 1e-12);
        }
    }

    #[test]
    fn distpfn_t_table_cases() {
        let prior = dist(&[0.8, 0.2]);
        let spec = AdjustmentSpec::new(Method::DistPfnT).per_instance();
        let out = distpfn_t_adjust(&single(&[0.6, 0.4]), &prior, &spec).unwrap();
        assert_abs_diff_eq!(out.row(0), &[0.33, 0.67][..], epsilon = 0.005);
        let out = distpfn_t_adjust(&single(&[0.4, 0.6]), &prior, &spec).unwrap();
        assert_abs_diff_eq!(out.row(0), &[0.12, 0.88][..], epsilon = 0.005);

        let half = dist(&[0.5, 0.5]);
        let out = distpfn_t_adjust(&single(&[0.5, 0.5]), &half, &spec).unwrap();
        assert_eq!(out.row(0), &[0.5, 0.5]);
    }

    #[test]
    fn distpfn_t_case_one_by_hand() {
        // τ = CE([.6,.4],[.8,.2]); p_T = softmax(p/τ); out = Norm(p ⊙ p_T / prior)
        let tau: f64 = -(0.6 * 0.8f64.ln() + 0.4 * 0.2f64.ln());
        let e0 = (0.6 / tau).exp();
        let e1 = (0.4 / tau).exp();
        let (t0, t1) = (e0 / (e0 + e1), e1 / (e0 + e1));
        let (w0, w1) = (0.6 * t0 / 0.8, 0.4 * t1 / 0.2);
        let expected = [w0 / (w0 + w1), w1 / (w0 + w1)];
        let spec = AdjustmentSpec::new(Method::DistPfnT).per_instance();
        let out = distpfn_t_adjust(&single(&[0.6, 0.4]), &dist(&[0.8, 0.2]), &spec).unwrap();
        assert_abs_diff_eq!(out.row(0), &expected[..], epsilon = 1e-14);
    }

    #[test]
    fn test_average_uses_column_mean() {
        let posts = PosteriorMatrix::from_rows(&[vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        let prior = dist(&[0.5, 0.5]);
        let out = distpfn_adjust(&posts, &prior, NumeratorMode::TestAverage).unwrap();
        // mean [0.6, 0.4] → α ∝ [1.2, 0.8]
        let expect0 = normalize(&[0.9 * 1.2, 0.1 * 0.8]).unwrap();
        let expect1 = normalize(&[0.3 * 1.2, 0.7 * 0.8]).unwrap();
        assert_abs_diff_eq!(out.row(0), expect0.as_slice(), epsilon = 1e-15);
        assert_abs_diff_eq!(out.row(1), expect1.as_slice(), epsilon = 1e-15);
    }

    #[test]
    fn identity_when_posterior_equals_prior() {
        let prior = dist(&[0.7, 0.2, 0.1]);
        let posts = PosteriorMatrix::repeat(&prior, 5);
        for mode in [NumeratorMode::PerInstance, NumeratorMode::TestAverage] {
            let out = distpfn_adjust(&posts, &prior, mode).unwrap();
            for row in out.rows() {
                assert_abs_diff_eq!(row, prior.as_slice(), epsilon = 1e-15);
            }
        }
        let out = prior_ratio_adjust(&posts, &prior, &prior).unwrap();
        for row in out.rows() {
            assert_abs_diff_eq!(row, prior.as_slice(), epsilon = 1e-15);
        }
    }

    #[test]
    fn distpfn_t_reduces_to_tempered_prior_at_identity() {
        // with p̂ = prior the factor cancels the row and leaves softmax(p̂/τ)
        let prior = dist(&[0.8, 0.2]);
        let spec = AdjustmentSpec::new(Method::DistPfnT);
        let out = distpfn_t_adjust(&PosteriorMatrix::repeat(&prior, 3), &prior, &spec).unwrap();
        let tau = compute_tau(&prior, &prior, TauMetric::CrossEntropy, CeDirection::PredFirst).unwrap();
        let expected = temperature_softmax(&prior, tau);
        for row in out.rows() {
            assert_abs_diff_eq!(row, expected.as_slice(), epsilon = 1e-14);
        }
    }

    #[test]
    fn prior_ratio_examples() {
        let out = prior_ratio_adjust(&single(&[0.6, 0.4]), &dist(&[0.8, 0.2]), &dist(&[0.2, 0.8])).unwrap();
        assert_abs_diff_eq!(out.row(0), &[0.15 / 1.75, 1.6 / 1.75][..], epsilon = 1e-15);
        assert_abs_diff_eq!(out.row(0), &[0.0857, 0.9143][..], epsilon = 1e-4);

        let out = prior_ratio_adjust(&single(&[0.0, 1.0]), &dist(&[0.5, 0.5]), &dist(&[0.9, 0.1])).unwrap();
        assert_eq!(out.row(0), &[0.0, 1.0]);
        assert_eq!(
            prior_ratio_adjust(&single(&[0.5, 0.5]), &dist(&[1.0, 0.0]), &dist(&[0.5, 0.5])),
            Err(Error::ZeroPrior { class: 1 })
        );
    }

    #[test]
    fn tau_metrics_and_direction() {
        let p = dist(&[0.6, 0.4]);
        let q = dist(&[0.8, 0.2]);
        let pred_first = compute_tau(&p, &q, TauMetric::CrossEntropy, CeDirection::PredFirst).unwrap();
        let prior_first = compute_tau(&p, &q, TauMetric::CrossEntropy, CeDirection::PriorFirst).unwrap();
        assert_abs_diff_eq!(pred_first.value(), cross_entropy(&p, &q).unwrap());
        assert_abs_diff_eq!(prior_first.value(), cross_entropy(&q, &p).unwrap());
        assert_abs_diff_eq!(
            compute_tau(&p, &q, TauMetric::L2, CeDirection::PredFirst).unwrap().value(),
            l2_distance(&p, &q).unwrap()
        );
        // identical inputs give a zero divergence, clamped to the minimum
        assert_eq!(
            compute_tau(&p, &p, TauMetric::Kl, CeDirection::PredFirst).unwrap().value(),
            Temperature::MIN
        );
    }

    #[test]
    fn apply_dispatch() {
        let posts = PosteriorMatrix::from_rows(&[vec![0.6, 0.4], vec![0.3, 0.7]]).unwrap();
        let prior = dist(&[0.8, 0.2]);
        let inputs = AdjustmentInputs::new(&posts, &prior);
        assert_eq!(apply(&AdjustmentSpec::new(Method::None), &inputs).unwrap(), posts);
        assert_eq!(
            apply(&AdjustmentSpec::new(Method::DistPfn), &inputs).unwrap(),
            distpfn_adjust(&posts, &prior, NumeratorMode::TestAverage).unwrap()
        );
        assert!(apply(&AdjustmentSpec::new(Method::PriorRatio), &inputs).is_err());
        assert!(apply(&AdjustmentSpec::new(Method::Bbe), &inputs).is_err());

        let train_posts = PosteriorMatrix::from_rows(&[vec![0.7, 0.3], vec![0.5, 0.5]]).unwrap();
        let with_train = AdjustmentInputs {
            train_posteriors: Some(&train_posts),
            ..inputs
        };
        let spec = AdjustmentSpec {
            reference_prior: ReferencePrior::TrainPrediction,
            ..AdjustmentSpec::new(Method::DistPfn)
        };
        assert_eq!(
            apply(&spec, &with_train).unwrap(),
            distpfn_adjust(&posts, &dist(&[0.6, 0.4]), NumeratorMode::TestAverage).unwrap()
        );
        assert!(apply(&spec, &inputs).is_err());
    }

    #[test]
    fn spec_from_json() {
        let spec: AdjustmentSpec =
            serde_json::from_str(r#"{"method": "distpfn_t", "tau_metric": "js", "fixed_tau": 0.5}"#).unwrap();
        assert_eq!(spec.method, Method::DistPfnT);
        assert_eq!(spec.numerator_mode, NumeratorMode::TestAverage);
        assert_eq!(spec.tau_metric, TauMetric::Js);
        assert_eq!(spec.fixed_tau, Some(Temperature::new(0.5)));
    }

    fn matrix_and_prior() -> impl Strategy<Value = (PosteriorMatrix, CategoricalDistribution)> {
        (2usize..6, 1usize..20).prop_flat_map(|(c, n)| {
            (
                prop::collection::vec(prop::collection::vec(0.0f64..1.0, c), n),
                prop::collection::vec(0.01f64..1.0, c),
            )
                .prop_filter_map("non-zero rows", |(rows, prior)| {
                    let rows: Option<Vec<Vec<f64>>> = rows
                        .into_iter()
                        .map(|r| normalize(&r).ok().map(CategoricalDistribution::into_vec))
                        .collect();
                    Some((PosteriorMatrix::from_rows(&rows?).ok()?, normalize(&prior).ok()?))
                })
        })
    }

    fn all_methods() -> Vec<AdjustmentSpec> {
        let mut specs = Vec::new();
        for mode in [NumeratorMode::PerInstance, NumeratorMode::TestAverage] {
            specs.push(AdjustmentSpec { numerator_mode: mode, ..AdjustmentSpec::new(Method::DistPfn) });
            for metric in [TauMetric::CrossEntropy, TauMetric::Kl, TauMetric::Js, TauMetric::L2] {
                for dir in [CeDirection::PredFirst, CeDirection::PriorFirst] {
                    specs.push(AdjustmentSpec {
                        numerator_mode: mode,
                        tau_metric: metric,
                        ce_direction: dir,
                        ..AdjustmentSpec::new(Method::DistPfnT)
                    });
                }
            }
        }
        specs
    }

    proptest! {
        #[test]
        fn outputs_are_distributions((posts, prior) in matrix_and_prior()) {
            let mut outputs = Vec::new();
            for spec in all_methods() {
                outputs.push(apply(&spec, &AdjustmentInputs::new(&posts, &prior)).unwrap());
            }
            outputs.push(prior_ratio_adjust(&posts, &prior, &CategoricalDistribution::uniform(prior.len()).unwrap()).unwrap());
            outputs.push(em_estimate_prior(&posts, &prior, 100, 1e-6).unwrap().adjusted);
            for out in outputs {
                for row in out.rows() {
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                    prop_assert!(row.iter().all(|&v| v >= 0.0));
                }
            }
        }

        #[test]
        fn uniform_prior_preserves_argmax((posts, prior) in matrix_and_prior()) {
            let uniform = CategoricalDistribution::uniform(prior.len()).unwrap();
            let before = posts.predictions();
            for spec in all_methods().into_iter().filter(|s| s.numerator_mode == NumeratorMode::PerInstance) {
                let out = apply(&spec, &AdjustmentInputs::new(&posts, &uniform)).unwrap();
                for (i, row) in out.rows().enumerate() {
                    // a strict winner before stays at least tied for first
                    let b = before[i];
                    let orig = posts.row(i);
                    let strict = orig.iter().enumerate().all(|(c, &v)| c == b || v < orig[b] * (1.0 - 1e-9));
                    if strict {
                        prop_assert_eq!(crate::distribution::argmax(row), b);
                    }
                }
            }
        }

        #[test]
        fn identity_property_random(prior in prop::collection::vec(0.01f64..1.0, 2..6), n in 1usize..10) {
            let prior = normalize(&prior).unwrap();
            let posts = PosteriorMatrix::repeat(&prior, n);
            for mode in [NumeratorMode::PerInstance, NumeratorMode::TestAverage] {
                let out = distpfn_adjust(&posts, &prior, mode).unwrap();
                for row in out.rows() {
                    for (a, b) in row.iter().zip(prior.iter()) {
                        prop_assert!((a - b).abs() < 1e-12);
                    }
                }
            }
            let out = prior_ratio_adjust(&posts, &prior, &prior).unwrap();
            let em = em_estimate_prior(&posts, &prior, 100, 1e-6).unwrap();
            prop_assert_eq!(em.iterations, 1);
            for (a_row, e_row) in out.rows().zip(em.adjusted.rows()) {
                for ((a, e), p) in a_row.iter().zip(e_row).zip(prior.iter()) {
                    prop_assert!((a - p).abs() < 1e-12);
                    prop_assert!((e - p).abs() < 1e-12);
                }
            }
        }
    }
}

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{check_query, check_training_set, softmax_in_place, ModelSpec};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::posterior::PosteriorMatrix;

/// Multinomial logistic regression trained by full-batch gradient descent.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    weights: Array2<f64>,
    bias: Array1<f64>,
}

/// Mean softmax cross-entropy plus `l2/2 · ‖W‖²` (bias unpenalized), and its
/// gradient with respect to `(weights, bias)`.
pub fn objective_and_gradient(
    weights: &Array2<f64>,
    bias: &Array1<f64>,
    features: ArrayView2<'_, f64>,
    labels: &[usize],
    l2: f64,
) -> (f64, Array2<f64>, Array1<f64>) {
    let n = features.nrows() as f64;
    // dot may hand back a column-major result for some shapes
    let mut probs = (features.dot(&weights.t()) + bias).as_standard_layout().into_owned();
    let mut loss = 0.0;
    for (mut row, &y) in probs.rows_mut().into_iter().zip(labels) {
        let slice = row.as_slice_mut().expect("row-major");
        softmax_in_place(slice);
        loss -= slice[y].max(f64::MIN_POSITIVE).ln();
        slice[y] -= 1.0;
    }
    // probs now holds P - Y
    probs /= n;
    let grad_w = probs.t().dot(&features) + &(weights * l2);
    let grad_b = probs.sum_axis(Axis(0));
    let loss = loss / n + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad_w, grad_b)
}

impl LogisticRegression {
    /// Zero-initialized, then `lr_epochs` gradient steps.
    pub fn fit(spec: &ModelSpec, train: &Dataset) -> Result<Self> {
        check_training_set(train)?;
        if !(spec.lr_learning_rate > 0.0 && spec.lr_learning_rate.is_finite()) {
            return Err(Error::InvalidModelSpec("lr_learning_rate must be > 0".into()));
        }
        if !(spec.lr_l2 >= 0.0 && spec.lr_l2.is_finite()) {
            return Err(Error::InvalidModelSpec("lr_l2 must be >= 0".into()));
        }
        let mut weights = Array2::zeros((train.n_classes, train.n_features()));
        let mut bias = Array1::zeros(train.n_classes);
        for _ in 0..spec.lr_epochs {
            let (_, gw, gb) =
                objective_and_gradient(&weights, &bias, train.features.view(), &train.labels, spec.lr_l2);
            weights.scaled_add(-spec.lr_learning_rate, &gw);
            bias.scaled_add(-spec.lr_learning_rate, &gb);
        }
        Ok(Self { weights, bias })
    }

    pub fn n_classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn predict_posteriors(&self, features: ArrayView2<'_, f64>) -> Result<PosteriorMatrix> {
        check_query(self.n_features(), &features)?;
        let mut logits = (features.dot(&self.weights.t()) + &self.bias).as_standard_layout().into_owned();
        for mut row in logits.rows_mut() {
            softmax_in_place(row.as_slice_mut().expect("row-major"));
        }
        Ok(PosteriorMatrix::from_normalized(logits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs() -> Dataset {
        Dataset::from_numeric(
            array![[-2.0, 0.1], [-1.5, -0.3], [-1.8, 0.4], [1.9, 0.0], [2.2, -0.2], [1.6, 0.3], [0.1, 2.0], [-0.2, 2.3]],
            vec![0, 0, 0, 1, 1, 1, 2, 2],
            3,
        )
        .unwrap()
    }

    #[test]
    fn zero_epochs_gives_uniform() {
        let spec = ModelSpec {
            lr_epochs: 0,
            ..ModelSpec::logistic_regression()
        };
        let m = LogisticRegression::fit(&spec, &blobs()).unwrap();
        assert!(m.weights().iter().all(|&w| w == 0.0));
        let p = m.predict_posteriors(array![[5.0, -1.0], [0.0, 0.0]].view()).unwrap();
        for row in p.rows() {
            for &v in row {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn training_reduces_loss_and_separates() {
        let ds = blobs();
        let m = LogisticRegression::fit(&ModelSpec::logistic_regression(), &ds).unwrap();
        let zero = (Array2::zeros((3, 2)), Array1::zeros(3));
        let (l0, _, _) = objective_and_gradient(&zero.0, &zero.1, ds.features.view(), &ds.labels, 1e-4);
        let (l1, _, _) = objective_and_gradient(m.weights(), m.bias(), ds.features.view(), &ds.labels, 1e-4);
        assert!(l1 < l0);
        let p = m.predict_posteriors(ds.features.view()).unwrap();
        assert_eq!(p.predictions(), ds.labels);
    }

    fn finite_difference_check(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, d, c) = (rng.random_range(3..10), rng.random_range(1..5), rng.random_range(2..5));
        let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let w = Array2::from_shape_fn((c, d), |_| rng.random_range(-1.0..1.0));
        let b = Array1::from_shape_fn(c, |_| rng.random_range(-1.0..1.0));
        let l2 = rng.random_range(0.0..0.1);
        let (_, gw, gb) = objective_and_gradient(&w, &b, x.view(), &labels, l2);
        let h = 1e-6;
        let rel = |analytic: f64, numeric: f64| (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
        for i in 0..c {
            for j in 0..d {
                let mut wp = w.clone();
                wp[[i, j]] += h;
                let mut wm = w.clone();
                wm[[i, j]] -= h;
                let fp = objective_and_gradient(&wp, &b, x.view(), &labels, l2).0;
                let fm = objective_and_gradient(&wm, &b, x.view(), &labels, l2).0;
                let numeric = (fp - fm) / (2.0 * h);
                assert!(rel(gw[[i, j]], numeric) < 1e-5, "w[{i},{j}]: {} vs {numeric}", gw[[i, j]]);
            }
            let mut bp = b.clone();
            bp[i] += h;
            let mut bm = b.clone();
            bm[i] -= h;
            let fp = objective_and_gradient(&w, &bp, x.view(), &labels, l2).0;
            let fm = objective_and_gradient(&w, &bm, x.view(), &labels, l2).0;
            let numeric = (fp - fm) / (2.0 * h);
            assert!(rel(gb[i], numeric) < 1e-5, "b[{i}]: {} vs {numeric}", gb[i]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn gradient_matches_finite_differences(seed in any::<u64>()) {
            finite_difference_check(seed);
        }
    }
}

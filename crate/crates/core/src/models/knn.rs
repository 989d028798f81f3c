use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{check_query, check_training_set, KnnWeighting, ModelSpec};
use crate::data::{Dataset, STD_FLOOR};
use crate::error::{Error, Result};
use crate::posterior::PosteriorMatrix;

/// Lazy k-nearest-neighbour classifier with soft voting.
///
/// Distances are Euclidean on features standardized with training
/// statistics. Ties at the k-th distance go to the lower training row.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    train: Array2<f64>,
    labels: Vec<usize>,
    mean: Array1<f64>,
    std: Array1<f64>,
    n_classes: usize,
    k: usize,
    weighting: KnnWeighting,
    smoothing: f64,
}

impl KnnModel {
    pub fn fit(spec: &ModelSpec, train: &Dataset) -> Result<Self> {
        check_training_set(train)?;
        if spec.knn_k == 0 || spec.knn_k > train.len() {
            return Err(Error::InvalidModelSpec(format!(
                "knn_k = {} must lie in [1, {}]",
                spec.knn_k,
                train.len()
            )));
        }
        if !(spec.knn_smoothing >= 0.0 && spec.knn_smoothing.is_finite()) {
            return Err(Error::InvalidModelSpec("knn_smoothing must be >= 0".into()));
        }
        let mean = train.features.mean_axis(Axis(0)).expect("non-empty");
        let std = train.features.std_axis(Axis(0), 0.0).mapv(|s| s.max(STD_FLOOR));
        let standardized = (&train.features - &mean) / &std;
        Ok(Self {
            train: standardized,
            labels: train.labels.clone(),
            mean,
            std,
            n_classes: train.n_classes,
            k: spec.knn_k,
            weighting: spec.knn_weighting,
            smoothing: spec.knn_smoothing,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.train.ncols()
    }

    pub fn n_train(&self) -> usize {
        self.labels.len()
    }

    /// Indices of the `k` nearest training rows, nearest first.
    pub fn neighbors(&self, query: &[f64]) -> Vec<(usize, f64)> {
        let q: Vec<f64> = query
            .iter()
            .zip(self.mean.iter().zip(self.std.iter()))
            .map(|(x, (m, s))| (x - m) / s)
            .collect();
        let mut dist: Vec<(usize, f64)> = self
            .train
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                let d2: f64 = row.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
                (i, d2)
            })
            .collect();
        let order = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, order);
            dist.truncate(self.k);
        }
        dist.sort_by(order);
        dist.into_iter().map(|(i, d2)| (i, d2.sqrt())).collect()
    }

    pub fn predict_posteriors(&self, features: ArrayView2<'_, f64>) -> Result<PosteriorMatrix> {
        check_query(self.n_features(), &features)?;
        let c = self.n_classes;
        let mut out = Array2::zeros((features.nrows(), c));
        for (query, mut row) in features.rows().into_iter().zip(out.rows_mut()) {
            let query = query.to_vec();
            let mut votes = vec![0.0; c];
            for (i, d) in self.neighbors(&query) {
                let w = match self.weighting {
                    KnnWeighting::Uniform => 1.0,
                    KnnWeighting::InverseDistance => 1.0 / d.max(1e-12),
                };
                votes[self.labels[i]] += w;
            }
            let total: f64 = votes.iter().sum();
            let denom = 1.0 + c as f64 * self.smoothing;
            for (slot, v) in row.iter_mut().zip(votes) {
                *slot = (v / total + self.smoothing) / denom;
            }
        }
        Ok(PosteriorMatrix::from_normalized(out))
    }
}

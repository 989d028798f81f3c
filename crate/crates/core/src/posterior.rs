use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};

use crate::data::{csv_error, io_error};
use crate::distribution::{argmax, CategoricalDistribution, SUM_TOLERANCE};
use crate::error::{Error, Result};

/// Per-instance class posteriors, one valid distribution per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMatrix {
    probs: Array2<f64>,
}

impl PosteriorMatrix {
    /// Validates every row of an `N x C` array.
    pub fn new(probs: Array2<f64>) -> Result<Self> {
        let classes = probs.ncols();
        if classes < 2 {
            return Err(Error::TooFewClasses(classes));
        }
        for row in probs.rows() {
            let mut sum = 0.0;
            for (index, &p) in row.iter().enumerate() {
                if !p.is_finite() {
                    return Err(Error::NonFinite { index });
                }
                if p < 0.0 {
                    return Err(Error::NegativeWeight { index, value: p });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::InvalidConfig(format!(
                    "posterior row sums to {sum}, not 1"
                )));
            }
        }
        Ok(Self { probs: as_standard(probs) })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let classes = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * classes);
        for row in rows {
            if row.len() != classes {
                return Err(Error::DimensionMismatch {
                    expected: classes,
                    actual: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        let probs = Array2::from_shape_vec((rows.len(), classes), flat)
            .expect("shape checked above");
        Self::new(probs)
    }

    pub fn from_distributions(rows: &[CategoricalDistribution]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = rows.iter().map(|d| d.as_slice().to_vec()).collect();
        Self::from_rows(&rows)
    }

    /// One row per instance, one numeric column per class, e.g. posteriors
    /// exported from a model this crate does not implement.
    pub fn read_csv(path: &Path, has_header: bool) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .from_path(path)
            .map_err(|e| io_error(path, e))?;
        let mut rows = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let values = record
                .iter()
                .enumerate()
                .map(|(column, s)| {
                    s.trim().parse::<f64>().map_err(|e| Error::Parse {
                        row,
                        column: Some(column),
                        message: e.to_string(),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(values);
        }
        Self::from_rows(&rows)
    }

    /// `n` copies of one distribution.
    pub fn repeat(row: &CategoricalDistribution, n: usize) -> Self {
        let mut probs = Array2::zeros((n, row.len()));
        for mut r in probs.rows_mut() {
            r.assign(&ndarray::ArrayView1::from(row.as_slice()));
        }
        Self { probs }
    }

    /// Rows are trusted to be normalized by construction.
    pub(crate) fn from_normalized(probs: Array2<f64>) -> Self {
        Self { probs: as_standard(probs) }
    }

    pub fn n_rows(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.probs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.nrows() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.probs
            .row(i)
            .to_slice()
            .expect("posterior storage is row-major")
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn row_distribution(&self, i: usize) -> CategoricalDistribution {
        CategoricalDistribution::from_normalized(self.row(i).to_vec())
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.probs.view()
    }

    pub fn into_array(self) -> Array2<f64> {
        self.probs
    }

    /// Hard predictions, ties to the lowest class index.
    pub fn predictions(&self) -> Vec<usize> {
        self.rows().map(argmax).collect()
    }

    /// Column mean of the rows.
    pub fn mean(&self) -> Result<CategoricalDistribution> {
        if self.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let mean = self
            .probs
            .mean_axis(Axis(0))
            .expect("non-empty matrix has a mean");
        // convexity keeps the mean normalized up to rounding
        let sum = mean.sum();
        Ok(CategoricalDistribution::from_normalized(
            mean.iter().map(|m| m / sum).collect(),
        ))
    }
}

fn as_standard(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

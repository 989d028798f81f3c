//! CSV ingestion and preprocessing into a fully numeric [`Dataset`].
//!
//! Numeric columns are mean-imputed and z-scored; categorical columns are
//! mode-imputed and one-hot encoded with a trailing "unseen" slot. All
//! statistics come from the split passed in `FitOnThis` mode and are reused
//! verbatim in `Apply` mode.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::distribution::{empirical_label_distribution, CategoricalDistribution};
use crate::error::{Error, Result};

/// Floor on standard deviations used for z-scoring.
pub const STD_FLOOR: f64 = 1e-9;

/// Tokens treated as missing values.
pub const MISSING_TOKENS: [&str; 2] = ["", "?"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    Categorical { categories: Vec<String> },
}

/// Origin of a block of encoded feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnSchema {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numeric,
        }
    }

    /// Number of encoded columns this source column expands into.
    pub fn width(&self) -> usize {
        match &self.kind {
            ColumnKind::Numeric => 1,
            ColumnKind::Categorical { categories } => categories.len() + 1,
        }
    }

    pub fn encoded_names(&self) -> Vec<String> {
        match &self.kind {
            ColumnKind::Numeric => vec![self.name.clone()],
            ColumnKind::Categorical { categories } => categories
                .iter()
                .map(|c| format!("{}={}", self.name, c))
                .chain(std::iter::once(format!("{}=<unseen>", self.name)))
                .collect(),
        }
    }
}

/// Numeric features plus class labels in `[0, n_classes)`.
///
/// `ids` carries the identity of each instance in its source table so that
/// splits and resamples can be audited. Rows whose label was not in the
/// dictionary are listed in `unknown_label_rows` and carry the sentinel
/// label `n_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub schema: Vec<ColumnSchema>,
    pub label_names: Vec<String>,
    pub ids: Vec<usize>,
    pub unknown_label_rows: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset with numeric columns `x0..x{d-1}` and labels named
    /// by their index.
    pub fn from_numeric(features: Array2<f64>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                actual: labels.len(),
            });
        }
        if n_classes < 2 {
            return Err(Error::TooFewClasses(n_classes));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::OutOfRangeLabel {
                label,
                classes: n_classes,
            });
        }
        if let Some(index) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let schema = (0..features.ncols())
            .map(|j| ColumnSchema::numeric(format!("x{j}")))
            .collect();
        let n = labels.len();
        Ok(Self {
            features,
            labels,
            n_classes,
            schema,
            label_names: (0..n_classes).map(|c| c.to_string()).collect(),
            ids: (0..n).collect(),
            unknown_label_rows: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Rows at `indices`, in that order. Repeats are allowed.
    pub fn select(&self, indices: &[usize]) -> Self {
        let features = self.features.select(ndarray::Axis(0), indices);
        let unknown: BTreeSet<usize> = self.unknown_label_rows.iter().copied().collect();
        Self {
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
            schema: self.schema.clone(),
            label_names: self.label_names.clone(),
            ids: indices.iter().map(|&i| self.ids[i]).collect(),
            unknown_label_rows: indices
                .iter()
                .enumerate()
                .filter(|(_, i)| unknown.contains(i))
                .map(|(pos, _)| pos)
                .collect(),
        }
    }

    /// Empirical class prior with additive smoothing `epsilon`.
    pub fn class_prior(&self, epsilon: f64) -> Result<CategoricalDistribution> {
        empirical_label_distribution(&self.labels, self.n_classes, epsilon)
    }

    /// Writes encoded features and the decoded label as the last column.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
        let mut header: Vec<String> = self.schema.iter().flat_map(ColumnSchema::encoded_names).collect();
        header.push("label".to_string());
        writer.write_record(&header).map_err(|e| io_error(path, e))?;
        for (row, &label) in self.features.rows().into_iter().zip(&self.labels) {
            let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            record.push(
                self.label_names
                    .get(label)
                    .cloned()
                    .unwrap_or_else(|| "?".to_string()),
            );
            writer.write_record(&record).map_err(|e| io_error(path, e))?;
        }
        writer.flush().map_err(|e| io_error(path, e))
    }
}

pub(crate) fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Selects the label column of a CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl LabelColumn {
    /// Interprets a command-line value: digits mean an index unless a header
    /// column carries that exact name.
    pub fn parse(value: &str) -> Self {
        match value.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(value.to_string()),
        }
    }

    fn resolve(&self, header: Option<&[String]>, width: usize) -> Result<usize> {
        match self {
            LabelColumn::Name(name) => header
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| Error::MissingLabelColumn(name.clone())),
            LabelColumn::Index(i) => {
                let by_name = header.and_then(|h| h.iter().position(|c| c == &i.to_string()));
                match by_name {
                    Some(p) => Ok(p),
                    None if *i < width => Ok(*i),
                    None => Err(Error::MissingLabelColumn(i.to_string())),
                }
            }
        }
    }
}

/// Typed view of a raw cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell<'a> {
    Missing,
    Numeric(f64),
    Token(&'a str),
}

fn parse_cell(raw: &str) -> Cell<'_> {
    let trimmed = raw.trim();
    if MISSING_TOKENS.contains(&trimmed) {
        return Cell::Missing;
    }
    match trimmed.parse::<f64>() {
        Ok(v) if v.is_finite() => Cell::Numeric(v),
        Ok(_) => Cell::Missing,
        Err(_) => Cell::Token(trimmed),
    }
}

/// An untyped CSV table split into feature cells and label tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    header: Option<Vec<String>>,
    label_index: usize,
    records: Vec<Vec<String>>,
}

impl RawTable {
    /// `records` are complete rows including the label column.
    pub fn from_records(
        header: Option<Vec<String>>,
        records: Vec<Vec<String>>,
        label_index: usize,
    ) -> Result<Self> {
        let width = header
            .as_ref()
            .map(Vec::len)
            .or_else(|| records.first().map(Vec::len))
            .unwrap_or(0);
        if label_index >= width {
            return Err(Error::MissingLabelColumn(label_index.to_string()));
        }
        for (row, record) in records.iter().enumerate() {
            if record.len() != width {
                return Err(Error::Parse {
                    row,
                    column: None,
                    message: format!("expected {width} fields, found {}", record.len()),
                });
            }
            if parse_cell(&record[label_index]) == Cell::Missing {
                return Err(Error::Parse {
                    row,
                    column: Some(label_index),
                    message: "missing label".to_string(),
                });
            }
        }
        Ok(Self {
            header,
            label_index,
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.width().saturating_sub(1)
    }

    fn width(&self) -> usize {
        self.header
            .as_ref()
            .map(Vec::len)
            .or_else(|| self.records.first().map(Vec::len))
            .unwrap_or(0)
    }

    fn feature_columns(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width()).filter(move |&c| c != self.label_index)
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.feature_columns()
            .map(|c| match &self.header {
                Some(h) => h[c].clone(),
                None => format!("col{c}"),
            })
            .collect()
    }

    /// Typed feature cell; `feature` indexes feature columns only.
    pub fn cell(&self, row: usize, feature: usize) -> Cell<'_> {
        let col = if feature >= self.label_index {
            feature + 1
        } else {
            feature
        };
        parse_cell(&self.records[row][col])
    }

    pub fn label(&self, row: usize) -> &str {
        self.records[row][self.label_index].trim()
    }

    pub fn labels(&self) -> Vec<&str> {
        (0..self.len()).map(|r| self.label(r)).collect()
    }

    /// Rows at `indices`, in order; repeats allowed.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            header: self.header.clone(),
            label_index: self.label_index,
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// Writes the original cells back out, header first when present.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
        if let Some(h) = &self.header {
            writer.write_record(h).map_err(|e| io_error(path, e))?;
        }
        for record in &self.records {
            writer.write_record(record).map_err(|e| io_error(path, e))?;
        }
        writer.flush().map_err(|e| io_error(path, e))
    }
}

/// Reads an RFC-4180 CSV. Empty cells and `?` are missing values.
pub fn load_csv(path: &Path, label: &LabelColumn, has_header: bool) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(false)
        .from_path(path)
        .map_err(|e| io_error(path, e))?;
    let header = if has_header {
        let h = reader.headers().map_err(|e| csv_error(path, e))?;
        Some(h.iter().map(|s| s.trim().to_string()).collect::<Vec<_>>())
    } else {
        None
    };
    let mut records = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        records.push(record.iter().map(str::to_string).collect::<Vec<_>>());
    }
    let width = header
        .as_ref()
        .map(Vec::len)
        .or_else(|| records.first().map(Vec::len))
        .unwrap_or(0);
    let label_index = label.resolve(header.as_deref(), width)?;
    RawTable::from_records(header, records, label_index)
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::UnequalLengths {
            pos,
            expected_len,
            len,
        } => Error::Parse {
            row: pos.as_ref().map_or(0, |p| p.line() as usize),
            column: None,
            message: format!("ragged row: expected {expected_len} fields, found {len}"),
        },
        csv::ErrorKind::Io(_) => io_error(path, e),
        _ => Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            column: None,
            message: e.to_string(),
        },
    }
}

/// Per-column statistics fitted on a training table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessStats {
    pub columns: Vec<ColumnStats>,
    pub label_dictionary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnStats {
    Numeric {
        name: String,
        mean: f64,
        std: f64,
        missing: usize,
    },
    Categorical {
        name: String,
        categories: Vec<String>,
        mode: Option<String>,
        missing: usize,
    },
}

impl ColumnStats {
    fn schema(&self) -> ColumnSchema {
        match self {
            ColumnStats::Numeric { name, .. } => ColumnSchema::numeric(name.clone()),
            ColumnStats::Categorical {
                name, categories, ..
            } => ColumnSchema {
                name: name.clone(),
                kind: ColumnKind::Categorical {
                    categories: categories.clone(),
                },
            },
        }
    }
}

/// Where preprocessing statistics come from.
#[derive(Debug, Clone, Copy)]
pub enum StatsSource<'a> {
    FitOnThis,
    Apply(&'a PreprocessStats),
}

/// Sorted distinct label tokens; numeric order when every token parses.
pub fn fit_label_dictionary<'a>(labels: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let distinct: BTreeSet<&str> = labels.into_iter().collect();
    let mut dict: Vec<String> = distinct.into_iter().map(str::to_string).collect();
    let numeric: Option<Vec<f64>> = dict.iter().map(|s| s.parse::<f64>().ok()).collect();
    if let Some(values) = numeric {
        let mut paired: Vec<(f64, String)> = values.into_iter().zip(dict).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        dict = paired.into_iter().map(|(_, s)| s).collect();
    }
    dict
}

impl PreprocessStats {
    /// Fits imputation, scaling and encoding statistics on `raw`.
    pub fn fit(raw: &RawTable) -> Result<Self> {
        let names = raw.feature_names();
        if names.is_empty() {
            return Err(Error::EmptyFeatures);
        }
        let mut columns = Vec::with_capacity(names.len());
        for (j, name) in names.into_iter().enumerate() {
            let cells: Vec<Cell<'_>> = (0..raw.len()).map(|r| raw.cell(r, j)).collect();
            let missing = cells.iter().filter(|c| **c == Cell::Missing).count();
            let is_numeric = cells.iter().all(|c| !matches!(c, Cell::Token(_)));
            if is_numeric {
                let values: Vec<f64> = cells
                    .iter()
                    .filter_map(|c| match c {
                        Cell::Numeric(v) => Some(*v),
                        _ => None,
                    })
                    .collect();
                let mean = if values.is_empty() {
                    0.0
                } else {
                    values.iter().sum::<f64>() / values.len() as f64
                };
                // variance over the imputed column, so train z-scores have unit std
                let n = cells.len().max(1) as f64;
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                columns.push(ColumnStats::Numeric {
                    name,
                    mean,
                    std: var.sqrt().max(STD_FLOOR),
                    missing,
                });
            } else {
                let mut counts: BTreeMap<String, usize> = BTreeMap::new();
                for cell in &cells {
                    match cell {
                        Cell::Missing => {}
                        Cell::Token(t) => *counts.entry(t.to_string()).or_default() += 1,
                        Cell::Numeric(_) => {}
                    }
                }
                // numeric-looking tokens in a categorical column keep their text
                for (r, cell) in cells.iter().enumerate() {
                    if let Cell::Numeric(_) = cell {
                        let text = raw_feature_text(raw, r, j);
                        *counts.entry(text).or_default() += 1;
                    }
                }
                let mode = counts
                    .iter()
                    .fold(None::<(&String, usize)>, |best, (k, &n)| match best {
                        Some((_, bn)) if bn >= n => best,
                        _ => Some((k, n)),
                    })
                    .map(|(k, _)| k.clone());
                columns.push(ColumnStats::Categorical {
                    name,
                    categories: counts.into_keys().collect(),
                    mode,
                    missing,
                });
            }
        }
        Ok(Self {
            columns,
            label_dictionary: fit_label_dictionary(raw.labels()),
        })
    }

    pub fn schema(&self) -> Vec<ColumnSchema> {
        self.columns.iter().map(ColumnStats::schema).collect()
    }

    pub fn encoded_width(&self) -> usize {
        self.schema().iter().map(ColumnSchema::width).sum()
    }

    /// Encodes `raw` with these statistics. Never refits.
    pub fn apply(&self, raw: &RawTable) -> Result<Dataset> {
        if self.columns.is_empty() || raw.n_features() == 0 {
            return Err(Error::EmptyFeatures);
        }
        if raw.n_features() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                expected: self.columns.len(),
                actual: raw.n_features(),
            });
        }
        let width = self.encoded_width();
        let n_classes = self.label_dictionary.len();
        let mut features = Array2::<f64>::zeros((raw.len(), width));
        let mut labels = Vec::with_capacity(raw.len());
        let mut unknown_label_rows = Vec::new();
        for r in 0..raw.len() {
            let mut offset = 0;
            for (j, stats) in self.columns.iter().enumerate() {
                match stats {
                    ColumnStats::Numeric { mean, std, .. } => {
                        let v = match raw.cell(r, j) {
                            Cell::Numeric(v) => v,
                            _ => *mean,
                        };
                        features[[r, offset]] = (v - mean) / std;
                        offset += 1;
                    }
                    ColumnStats::Categorical {
                        categories, mode, ..
                    } => {
                        let token = match raw.cell(r, j) {
                            Cell::Missing => mode.clone(),
                            _ => Some(raw_feature_text(raw, r, j)),
                        };
                        let slot = token
                            .and_then(|t| categories.binary_search(&t).ok())
                            .unwrap_or(categories.len());
                        features[[r, offset + slot]] = 1.0;
                        offset += categories.len() + 1;
                    }
                }
            }
            let token = raw.label(r);
            match self.label_dictionary.iter().position(|l| l == token) {
                Some(k) => labels.push(k),
                None => {
                    unknown_label_rows.push(r);
                    labels.push(n_classes);
                }
            }
        }
        Ok(Dataset {
            features,
            labels,
            n_classes,
            schema: self.schema(),
            label_names: self.label_dictionary.clone(),
            ids: (0..raw.len()).collect(),
            unknown_label_rows,
        })
    }
}

fn raw_feature_text(raw: &RawTable, row: usize, feature: usize) -> String {
    let col = if feature >= raw.label_index {
        feature + 1
    } else {
        feature
    };
    raw.records[row][col].trim().to_string()
}

/// Fits on (or applies stats to) `raw` and returns the encoded dataset.
pub fn preprocess(raw: &RawTable, source: StatsSource<'_>) -> Result<(Dataset, PreprocessStats)> {
    let stats = match source {
        StatsSource::FitOnThis => PreprocessStats::fit(raw)?,
        StatsSource::Apply(stats) => stats.clone(),
    };
    let dataset = stats.apply(raw)?;
    Ok((dataset, stats))
}

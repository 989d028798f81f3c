//! The β sweep: for every dataset and seed, split once; for every β (plus
//! an unshifted control) oversample the training half; fit every model;
//! apply every correction; score on the untouched test half.
//!
//! Failures are caught at the narrowest level that produced them and turned
//! into records with a `failed:` status, so one bad dataset or model never
//! stops the sweep.

use std::fs;
use std::path::Path;
use std::time::Instant;

use labelshift::adjust::{
    self, cv_select_temperature, holdout_confusion, predicted_label_distribution, AdjustmentInputs, ConfusionMatrix,
    Method, ReferencePrior,
};
use labelshift::data::{fit_label_dictionary, load_csv, PreprocessStats};
use labelshift::distribution::{class_counts, empirical_label_distribution};
use labelshift::metrics::evaluate;
use labelshift::models::{fit, predict_posteriors};
use labelshift::shiftbench::{
    balance_ratio, label_shift_kl, oversample, split_fixed, split_indices, DEFAULT_KL_SMOOTHING,
};
use labelshift::{CategoricalDistribution, Dataset, Error, ModelSpec, PosteriorMatrix, RawTable, ShiftConfig, SplitSpec};
use serde::{Deserialize, Serialize};

use crate::config::{DatasetSource, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::seed::{derive, Part};

/// Column order of `report.csv`.
pub const REPORT_HEADER: [&str; 14] = [
    "dataset",
    "model",
    "method",
    "beta",
    "seed",
    "accuracy",
    "macro_precision",
    "ece",
    "label_kl",
    "balance_ratio",
    "n_train",
    "n_test",
    "duration_ms",
    "status",
];

/// `beta` value written for the unshifted control.
pub const UNSHIFTED: &str = "unshifted";

pub const STATUS_OK: &str = "ok";

/// One (dataset, model, method, β, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub dataset: String,
    pub model: String,
    pub method: String,
    /// `None` for the unshifted control.
    pub beta: Option<f64>,
    pub seed: u64,
    pub accuracy: Option<f64>,
    pub macro_precision: Option<f64>,
    pub ece: Option<f64>,
    pub label_kl: Option<f64>,
    pub balance_ratio: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub duration_ms: f64,
    pub status: String,
    /// Class counts of the (oversampled) training set.
    pub train_histogram: Vec<usize>,
    /// Temperature used when fixed or chosen by cross-validation.
    pub tau: Option<f64>,
    /// Non-fatal notes, e.g. `absent_class` when the balance ratio is
    /// undefined and reported as 0.
    pub flags: Vec<String>,
}

impl Record {
    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }

    fn csv_row(&self) -> Vec<String> {
        let num = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        vec![
            self.dataset.clone(),
            self.model.clone(),
            self.method.clone(),
            self.beta.map_or_else(|| UNSHIFTED.to_string(), |b| b.to_string()),
            self.seed.to_string(),
            num(self.accuracy),
            num(self.macro_precision),
            num(self.ece),
            num(self.label_kl),
            num(self.balance_ratio),
            self.n_train.to_string(),
            self.n_test.to_string(),
            self.duration_ms.to_string(),
            self.status.clone(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub records: Vec<Record>,
}

impl ExperimentReport {
    pub fn n_failed(&self) -> usize {
        self.records.iter().filter(|r| !r.is_ok()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(REPORT_HEADER).expect("in-memory write");
        for r in &self.records {
            writer.write_record(r.csv_row()).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    /// Writes `report.csv` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let csv_path = dir.join("report.csv");
        fs::write(&csv_path, self.to_csv()).map_err(|e| CliError::io(&csv_path, e))?;
        let json_path = dir.join("report.json");
        let json = serde_json::to_string_pretty(self).expect("records serialize");
        fs::write(&json_path, json + "\n").map_err(|e| CliError::io(&json_path, e))
    }
}

/// Names and positions shared by every record of a cell.
struct Cell<'a> {
    dataset: &'a str,
    seed: u64,
    beta: Option<f64>,
    /// (dataset, model, method, β, seed) positions for canonical ordering.
    key: [usize; 5],
}

struct Shared {
    n_train: usize,
    n_test: usize,
    histogram: Vec<usize>,
    label_kl: Option<f64>,
    balance_ratio: Option<f64>,
    flags: Vec<String>,
}

impl Shared {
    fn empty() -> Self {
        Self {
            n_train: 0,
            n_test: 0,
            histogram: Vec::new(),
            label_kl: None,
            balance_ratio: None,
            flags: Vec::new(),
        }
    }
}

struct Sweep<'a> {
    config: &'a ExperimentConfig,
    models: Vec<String>,
    methods: Vec<String>,
    out: Vec<([usize; 5], Record)>,
}

fn beta_tag(beta: Option<f64>) -> Part<'static> {
    match beta {
        None => Part::Str(UNSHIFTED),
        Some(b) => Part::U64(b.to_bits()),
    }
}

impl<'a> Sweep<'a> {
    fn push(&mut self, cell: &Cell<'_>, model: usize, method: usize, shared: &Shared, outcome: Outcome) {
        let mut key = cell.key;
        key[1] = model;
        key[2] = method;
        let (metrics, status, tau, duration_ms) = match outcome {
            Outcome::Ok { metrics, tau, duration_ms } => (Some(metrics), STATUS_OK.to_string(), tau, duration_ms),
            Outcome::Failed(message) => (None, format!("failed: {message}"), None, 0.0),
        };
        let record = Record {
            dataset: cell.dataset.to_string(),
            model: self.models[model].clone(),
            method: self.methods[method].clone(),
            beta: cell.beta,
            seed: cell.seed,
            accuracy: metrics.as_ref().map(|m| m.accuracy),
            macro_precision: metrics.as_ref().map(|m| m.macro_precision),
            ece: metrics.as_ref().map(|m| m.ece),
            label_kl: shared.label_kl,
            balance_ratio: shared.balance_ratio,
            n_train: shared.n_train,
            n_test: shared.n_test,
            duration_ms: if self.config.record_timing { duration_ms } else { 0.0 },
            status,
            train_histogram: shared.histogram.clone(),
            tau,
            flags: shared.flags.clone(),
        };
        self.out.push((key, record));
    }

    /// Marks every (model, method) of a cell as failed.
    fn fail_cell(&mut self, cell: &Cell<'_>, shared: &Shared, message: &str) {
        for model in 0..self.models.len() {
            self.fail_model(cell, model, shared, message);
        }
    }

    fn fail_model(&mut self, cell: &Cell<'_>, model: usize, shared: &Shared, message: &str) {
        for method in 0..self.methods.len() {
            self.push(cell, model, method, shared, Outcome::Failed(message.to_string()));
        }
    }

    fn beta_levels(&self) -> Vec<Option<f64>> {
        std::iter::once(None).chain(self.config.betas.iter().copied().map(Some)).collect()
    }

    fn run_dataset(&mut self, index: usize, name: &str) {
        let source = &self.config.datasets[index].source;
        let table = match source {
            DatasetSource::Csv { path, label, has_header } => match load_csv(path, label, *has_header) {
                Ok(t) => Some(t),
                Err(e) => {
                    self.fail_dataset(index, name, &e.to_string());
                    return;
                }
            },
            DatasetSource::Synthetic { .. } => None,
        };
        let levels = self.beta_levels();
        for (s, &seed) in self.config.seeds.iter().enumerate() {
            let split = match source {
                DatasetSource::Csv { .. } => self.split_table(table.as_ref().expect("loaded"), name, seed),
                DatasetSource::Synthetic { synthetic, n } => synthetic
                    .with_seed(derive(seed, &[Part::Str(name), Part::Str("sample")]))
                    .sample(*n)
                    .and_then(|ds| split_fixed(&ds, &self.split_spec(name, seed))),
            };
            match split {
                Ok((train, test)) => {
                    for (b, &beta) in levels.iter().enumerate() {
                        let cell = Cell {
                            dataset: name,
                            seed,
                            beta,
                            key: [index, 0, 0, b, s],
                        };
                        self.run_cell(&cell, &train, &test);
                    }
                }
                Err(e) => {
                    for (b, &beta) in levels.iter().enumerate() {
                        let cell = Cell {
                            dataset: name,
                            seed,
                            beta,
                            key: [index, 0, 0, b, s],
                        };
                        self.fail_cell(&cell, &Shared::empty(), &e.to_string());
                    }
                }
            }
        }
    }

    fn fail_dataset(&mut self, index: usize, name: &str, message: &str) {
        let levels = self.beta_levels();
        for (s, &seed) in self.config.seeds.iter().enumerate() {
            for (b, &beta) in levels.iter().enumerate() {
                let cell = Cell {
                    dataset: name,
                    seed,
                    beta,
                    key: [index, 0, 0, b, s],
                };
                self.fail_cell(&cell, &Shared::empty(), message);
            }
        }
    }

    fn split_spec(&self, name: &str, seed: u64) -> SplitSpec {
        SplitSpec {
            train_fraction: self.config.train_fraction,
            seed: derive(seed, &[Part::Str(name), Part::Str("split")]),
            stratified: self.config.stratified,
        }
    }

    /// Label dictionary from the whole table; feature statistics from the
    /// training half only.
    fn split_table(&self, table: &RawTable, name: &str, seed: u64) -> labelshift::Result<(Dataset, Dataset)> {
        let dictionary = fit_label_dictionary(table.labels());
        let labels: Vec<usize> = table
            .labels()
            .iter()
            .map(|l| dictionary.iter().position(|d| d == l).expect("dictionary covers the table"))
            .collect();
        let (train_idx, test_idx) = split_indices(&labels, &self.split_spec(name, seed))?;
        let train_raw = table.select_rows(&train_idx);
        let mut stats = PreprocessStats::fit(&train_raw)?;
        stats.label_dictionary = dictionary;
        let mut train = stats.apply(&train_raw)?;
        let mut test = stats.apply(&table.select_rows(&test_idx))?;
        // ids refer back to rows of the full table
        train.ids = train_idx;
        test.ids = test_idx;
        Ok((train, test))
    }

    fn run_cell(&mut self, cell: &Cell<'_>, train: &Dataset, test: &Dataset) {
        let c = train.n_classes;
        let shifted = match cell.beta {
            None => Ok(train.clone()),
            Some(beta) => {
                let seed = derive(cell.seed, &[Part::Str(cell.dataset), Part::Str("shift"), beta_tag(cell.beta)]);
                ShiftConfig::new(beta, self.config.target_size.unwrap_or(train.len()), seed)
                    .and_then(|config| oversample(train, &config))
            }
        };
        let shifted = match shifted {
            Ok(s) => s,
            Err(e) => {
                let shared = Shared {
                    n_train: train.len(),
                    n_test: test.len(),
                    ..Shared::empty()
                };
                self.fail_cell(cell, &shared, &e.to_string());
                return;
            }
        };
        let mut shared = Shared {
            n_train: shifted.len(),
            n_test: test.len(),
            histogram: class_counts(&shifted.labels, c).unwrap_or_default(),
            label_kl: label_shift_kl(&shifted.labels, &test.labels, c, DEFAULT_KL_SMOOTHING).ok(),
            balance_ratio: None,
            flags: Vec::new(),
        };
        shared.balance_ratio = match balance_ratio(&shifted.labels, c) {
            Ok(r) => Some(r),
            Err(Error::AbsentClass { .. }) => {
                shared.flags.push("absent_class".into());
                Some(0.0)
            }
            Err(_) => None,
        };
        let priors = empirical_label_distribution(&shifted.labels, c, self.config.prior_smoothing)
            .and_then(|train_prior| Ok((train_prior, empirical_label_distribution(&test.labels, c, 0.0)?)));
        let (train_prior, test_prior) = match priors {
            Ok(p) => p,
            Err(e) => {
                self.fail_cell(cell, &shared, &e.to_string());
                return;
            }
        };
        for m in 0..self.models.len() {
            self.run_model(cell, m, &shifted, test, &train_prior, &test_prior, &shared);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn run_model(
        &mut self,
        cell: &Cell<'_>,
        m: usize,
        train: &Dataset,
        test: &Dataset,
        train_prior: &CategoricalDistribution,
        test_prior: &CategoricalDistribution,
        shared: &Shared,
    ) {
        let model_name = self.models[m].clone();
        let path = |tag: &'static str| {
            derive(
                cell.seed,
                &[Part::Str(cell.dataset), beta_tag(cell.beta), Part::Str(&model_name), Part::Str(tag)],
            )
        };
        let spec = ModelSpec {
            seed: path("model"),
            ..self.config.models[m].spec.clone()
        };
        let started = Instant::now();
        let fitted = fit(&spec, train).and_then(|model| predict_posteriors(&model, test.features.view()).map(|p| (model, p)));
        let (model, posteriors) = match fitted {
            Ok(v) => v,
            Err(e) => {
                self.fail_model(cell, m, shared, &e.to_string());
                return;
            }
        };
        let model_ms = started.elapsed().as_secs_f64() * 1e3;

        let methods = &self.config.methods;
        let train_posteriors = methods
            .iter()
            .any(|mc| mc.spec.reference_prior == ReferencePrior::TrainPrediction)
            .then(|| predict_posteriors(&model, train.features.view()));
        let bbe = methods.iter().any(|mc| mc.spec.method == Method::Bbe).then(|| {
            holdout_confusion(train, &spec, path("bbe")).and_then(|(aux, confusion)| {
                let aux_posteriors = predict_posteriors(&aux, test.features.view())?;
                Ok((confusion, predicted_label_distribution(&aux_posteriors)?))
            })
        });

        for k in 0..methods.len() {
            let started = Instant::now();
            let method_name = self.methods[k].clone();
            let outcome = self
                .adjust_one(
                    k,
                    &spec,
                    train,
                    test,
                    &posteriors,
                    train_prior,
                    test_prior,
                    train_posteriors.as_ref(),
                    bbe.as_ref(),
                    derive(
                        cell.seed,
                        &[
                            Part::Str(cell.dataset),
                            beta_tag(cell.beta),
                            Part::Str(&model_name),
                            Part::Str(&method_name),
                            Part::Str("cv"),
                        ],
                    ),
                )
                .map(|(metrics, tau)| Outcome::Ok {
                    metrics,
                    tau,
                    duration_ms: model_ms + started.elapsed().as_secs_f64() * 1e3,
                })
                .unwrap_or_else(|e| Outcome::Failed(e.to_string()));
            self.push(cell, m, k, shared, outcome);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn adjust_one(
        &self,
        k: usize,
        model: &ModelSpec,
        train: &Dataset,
        test: &Dataset,
        posteriors: &PosteriorMatrix,
        train_prior: &CategoricalDistribution,
        test_prior: &CategoricalDistribution,
        train_posteriors: Option<&labelshift::Result<PosteriorMatrix>>,
        bbe: Option<&labelshift::Result<(ConfusionMatrix, CategoricalDistribution)>>,
        cv_seed: u64,
    ) -> labelshift::Result<(labelshift::EvaluationResult, Option<f64>)> {
        let method = &self.config.methods[k];
        let mut spec = method.spec;
        if let Some(cv) = &method.cv {
            let tau = cv_select_temperature(train, model, &cv.grid, cv.folds, spec.numerator_mode, cv_seed)?;
            spec.fixed_tau = Some(tau);
        }
        let train_posteriors = match train_posteriors {
            Some(r) => Some(r.as_ref().map_err(Clone::clone)?),
            None => None,
        };
        let confusion = match (spec.method, bbe) {
            (Method::Bbe, Some(r)) => {
                let (cm, predicted) = r.as_ref().map_err(Clone::clone)?;
                Some((cm, predicted))
            }
            _ => None,
        };
        let inputs = AdjustmentInputs {
            test_posteriors: posteriors,
            train_prior,
            train_posteriors,
            target_prior: Some(test_prior),
            confusion,
            em: self.config.em,
        };
        let adjusted = adjust::apply(&spec, &inputs)?;
        let metrics = evaluate(&adjusted, &test.labels, self.config.ece_bins)?;
        let tau = if spec.method == Method::DistPfnT {
            spec.fixed_tau.map(|t| t.value())
        } else {
            None
        };
        Ok((metrics, tau))
    }
}

enum Outcome {
    Ok {
        metrics: labelshift::EvaluationResult,
        tau: Option<f64>,
        duration_ms: f64,
    },
    Failed(String),
}

/// Runs the full sweep. Records come back in canonical
/// (dataset, model, method, β, seed) order, the unshifted control first.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut sweep = Sweep {
        config,
        models: config.model_names(),
        methods: config.method_names(),
        out: Vec::new(),
    };
    for (index, name) in config.dataset_names().iter().enumerate() {
        sweep.run_dataset(index, name);
    }
    sweep.out.sort_by_key(|(key, _)| *key);
    Ok(ExperimentReport {
        records: sweep.out.into_iter().map(|(_, r)| r).collect(),
    })
}

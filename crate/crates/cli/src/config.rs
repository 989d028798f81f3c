//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "datasets": [{"path": "data/iris.csv", "label": "species"}],
//!   "betas": [0.0, 0.5, 2.0],
//!   "models": [{"kind": "knn", "knn_k": 10}],
//!   "methods": ["none", "distpfn", {"method": "distpfn_t", "name": "distpfn_t_pi", "numerator_mode": "per_instance"}],
//!   "seeds": [0, 1, 2]
//! }
//! ```
//!
//! Every field except `datasets` has a default.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use labelshift::adjust::{AdjustmentSpec, EmOptions, Method, DEFAULT_TAU_GRID};
use labelshift::metrics::DEFAULT_ECE_BINS;
use labelshift::{GaussianMixtureSpec, LabelColumn, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        label: LabelColumn,
        #[serde(default = "yes")]
        has_header: bool,
    },
    /// Sampled afresh for every seed.
    Synthetic { synthetic: GaussianMixtureSpec, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    /// Defaults to the file stem, or `synthetic{i}`.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub source: DatasetSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Defaults to the model kind.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub spec: ModelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub grid: Vec<f64>,
    pub folds: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            grid: DEFAULT_TAU_GRID.to_vec(),
            folds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    /// Defaults to the method name, suffixed `_cv` when `cv` is set.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub spec: AdjustmentSpec,
    /// Selects the DistPFN-T temperature by cross-validation on the
    /// (shifted) training set instead of from the divergence.
    #[serde(default)]
    pub cv: Option<CvConfig>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MethodEntry {
    Bare(Method),
    Full(MethodConfig),
}

impl From<MethodEntry> for MethodConfig {
    fn from(entry: MethodEntry) -> Self {
        match entry {
            MethodEntry::Bare(method) => MethodConfig {
                name: None,
                spec: AdjustmentSpec::new(method),
                cv: None,
            },
            MethodEntry::Full(config) => config,
        }
    }
}

fn methods_from_entries<'de, D>(deserializer: D) -> std::result::Result<Vec<MethodConfig>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let entries = Vec::<MethodEntry>::deserialize(deserializer)?;
    Ok(entries.into_iter().map(MethodConfig::from).collect())
}

impl MethodConfig {
    pub fn display_name(&self) -> String {
        match (&self.name, &self.cv) {
            (Some(name), _) => name.clone(),
            (None, Some(_)) => format!("{}_cv", self.spec.method.name()),
            (None, None) => self.spec.method.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetConfig>,
    pub train_fraction: f64,
    pub stratified: bool,
    pub betas: Vec<f64>,
    pub models: Vec<ModelConfig>,
    #[serde(deserialize_with = "methods_from_entries")]
    pub methods: Vec<MethodConfig>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Size of each oversampled training set; the split size when absent.
    pub target_size: Option<usize>,
    /// Smoothing for the training prior handed to the corrections.
    pub prior_smoothing: f64,
    pub em: EmOptions,
    pub ece_bins: usize,
    /// Wall-clock timings make reports differ between runs, so they are
    /// off unless asked for.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            datasets: Vec::new(),
            train_fraction: 0.5,
            stratified: false,
            betas: vec![0.0, 0.1, 0.5, 1.0, 2.0, 5.0],
            models: vec![ModelConfig {
                name: None,
                spec: ModelSpec::default(),
            }],
            methods: [Method::None, Method::DistPfn, Method::DistPfnT]
                .into_iter()
                .map(|m| MethodEntry::Bare(m).into())
                .collect(),
            seeds: (0..5).collect(),
            out_dir: PathBuf::from("results"),
            target_size: None,
            prior_smoothing: 0.0,
            em: EmOptions::default(),
            ece_bins: DEFAULT_ECE_BINS,
            record_timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        // relative dataset paths resolve against the config file
        if let Some(dir) = path.parent() {
            for d in &mut config.datasets {
                if let DatasetSource::Csv { path, .. } = &mut d.source {
                    if path.is_relative() {
                        *path = dir.join(&*path);
                    }
                }
            }
        }
        Ok(config)
    }

    pub fn dataset_names(&self) -> Vec<String> {
        self.datasets
            .iter()
            .enumerate()
            .map(|(i, d)| match (&d.name, &d.source) {
                (Some(name), _) => name.clone(),
                (None, DatasetSource::Csv { path, .. }) => path
                    .file_stem()
                    .map_or_else(|| format!("dataset{i}"), |s| s.to_string_lossy().into_owned()),
                (None, DatasetSource::Synthetic { .. }) => format!("synthetic{i}"),
            })
            .collect()
    }

    pub fn model_names(&self) -> Vec<String> {
        self.models
            .iter()
            .map(|m| m.name.clone().unwrap_or_else(|| m.spec.kind.name().to_string()))
            .collect()
    }

    pub fn method_names(&self) -> Vec<String> {
        self.methods.iter().map(MethodConfig::display_name).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.datasets.is_empty() {
            return fail("at least one dataset is required".into());
        }
        if self.models.is_empty() || self.methods.is_empty() || self.seeds.is_empty() {
            return fail("models, methods and seeds must be non-empty".into());
        }
        if let Some(b) = self.betas.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
            return fail(format!("beta values must be >= 0, got {b}"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        if !(self.prior_smoothing >= 0.0 && self.prior_smoothing.is_finite()) {
            return fail("prior_smoothing must be >= 0".into());
        }
        if self.ece_bins == 0 {
            return fail("ece_bins must be positive".into());
        }
        if self.target_size == Some(0) {
            return fail("target_size must be positive".into());
        }
        for (axis, names) in [
            ("dataset", self.dataset_names()),
            ("model", self.model_names()),
            ("method", self.method_names()),
        ] {
            let mut seen = BTreeSet::new();
            if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
                return fail(format!("duplicate {axis} name {dup:?}; set an explicit name"));
            }
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = self.betas.iter().find(|b| !seen.insert(b.to_bits())) {
            return fail(format!("duplicate beta {dup}"));
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return fail(format!("duplicate seed {dup}"));
        }
        for m in &self.methods {
            if m.cv.is_some() && m.spec.method != Method::DistPfnT {
                return fail(format!("{}: cv applies only to distpfn_t", m.display_name()));
            }
            if let Some(cv) = &m.cv {
                if cv.grid.is_empty() || cv.folds < 2 {
                    return fail(format!("{}: cv needs a grid and at least 2 folds", m.display_name()));
                }
            }
        }
        Ok(())
    }
}

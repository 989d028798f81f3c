//! Writes an oversampled copy of a CSV and a JSON sidecar describing it.

use std::fs;
use std::path::{Path, PathBuf};

use labelshift::data::{fit_label_dictionary, load_csv};
use labelshift::distribution::{class_counts, empirical_label_distribution};
use labelshift::shiftbench::{balance_ratio, inverse_frequency_weights, oversample_indices};
use labelshift::{LabelColumn, ShiftConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct ShiftGenOptions {
    pub data: PathBuf,
    pub label: LabelColumn,
    pub has_header: bool,
    pub beta: f64,
    pub seed: u64,
    /// Defaults to the input row count.
    pub target_size: Option<usize>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub source: String,
    pub beta: f64,
    pub seed: u64,
    pub n_rows: usize,
    pub class_names: Vec<String>,
    /// Class sampling probabilities, `∝ p_k^(−β)`.
    pub weights: Vec<f64>,
    pub source_histogram: Vec<usize>,
    pub histogram: Vec<usize>,
    /// 0 when a class is absent from the output, listed in `absent_classes`.
    pub balance_ratio: f64,
    pub absent_classes: Vec<String>,
}

/// `<out>.json`, e.g. `train.csv` → `train.csv.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn shift_gen(opts: &ShiftGenOptions) -> Result<Sidecar> {
    let table = load_csv(&opts.data, &opts.label, opts.has_header)?;
    let dictionary = fit_label_dictionary(table.labels());
    let labels: Vec<usize> = table
        .labels()
        .iter()
        .map(|l| dictionary.iter().position(|d| d == l).expect("dictionary covers the table"))
        .collect();
    let c = dictionary.len();
    let config = ShiftConfig::new(opts.beta, opts.target_size.unwrap_or(table.len()), opts.seed)?;
    let indices = oversample_indices(&labels, c, &config)?;
    let weights = inverse_frequency_weights(&empirical_label_distribution(&labels, c, 0.0)?, opts.beta)?;

    let drawn: Vec<usize> = indices.iter().map(|&i| labels[i]).collect();
    let histogram = class_counts(&drawn, c)?;
    let absent_classes: Vec<String> = histogram
        .iter()
        .zip(&dictionary)
        .filter(|(&n, _)| n == 0)
        .map(|(_, name)| name.clone())
        .collect();
    let ratio = if absent_classes.is_empty() { balance_ratio(&drawn, c)? } else { 0.0 };

    if let Some(dir) = opts.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    table.select_rows(&indices).write_csv(&opts.out)?;
    let sidecar = Sidecar {
        source: opts.data.display().to_string(),
        beta: opts.beta,
        seed: opts.seed,
        n_rows: indices.len(),
        class_names: dictionary,
        weights: weights.into_vec(),
        source_histogram: class_counts(&labels, c)?,
        histogram,
        balance_ratio: ratio,
        absent_classes,
    };
    let path = sidecar_path(&opts.out);
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    fs::write(&path, json + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(sidecar)
}

//! Grouped summaries of a `report.csv`: mean and standard deviation of
//! every metric per group, plus the mean accuracy rank of each record among
//! the methods of its (dataset, model, β, seed) cell.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use labelshift::metrics::rank_descending;

use crate::error::{CliError, Result};
use crate::harness::{REPORT_HEADER, STATUS_OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    Dataset,
    Model,
    Method,
    Beta,
    Seed,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Dataset => "dataset",
            Axis::Model => "model",
            Axis::Method => "method",
            Axis::Beta => "beta",
            Axis::Seed => "seed",
        }
    }

    fn column(self) -> usize {
        self as usize
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "dataset" => Ok(Axis::Dataset),
            "model" => Ok(Axis::Model),
            "method" => Ok(Axis::Method),
            "beta" => Ok(Axis::Beta),
            "seed" => Ok(Axis::Seed),
            other => Err(CliError::UnknownAxis(other.to_string())),
        }
    }

    /// Comma-separated list; empty entries are ignored.
    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        s.split(',').filter(|p| !p.trim().is_empty()).map(Self::parse).collect()
    }
}

/// Metric columns aggregated by [`summarize`], in output order.
pub const METRICS: [&str; 5] = ["accuracy", "macro_precision", "ece", "label_kl", "balance_ratio"];

/// A report row as read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// dataset, model, method, beta, seed
    pub keys: [String; 5],
    pub metrics: [Option<f64>; 5],
    pub ok: bool,
}

pub fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let path = if path.is_dir() { path.join("report.csv") } else { path.to_path_buf() };
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    parse_rows(&text).map_err(|message| CliError::Report {
        path: path.display().to_string(),
        message,
    })
}

pub fn parse_rows(text: &str) -> std::result::Result<Vec<Row>, String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(REPORT_HEADER.iter().copied()) {
        return Err(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let field = |j: usize| record.get(j).unwrap_or("");
        let keys = [0, 1, 2, 3, 4].map(|j| field(j).to_string());
        let mut metrics = [None; 5];
        for (slot, j) in metrics.iter_mut().zip(5..10) {
            let raw = field(j);
            if !raw.is_empty() {
                *slot = Some(raw.parse::<f64>().map_err(|e| format!("row {}: {}: {e}", i + 1, REPORT_HEADER[j]))?);
            }
        }
        rows.push(Row {
            keys,
            metrics,
            ok: field(13) == STATUS_OK,
        });
    }
    Ok(rows)
}

/// Sample standard deviation; 0 below two values.
fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), Some(0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

/// Accuracy rank of each successful row among the methods of its
/// (dataset, model, β, seed) cell; 1 is best, ties share the mean rank.
pub fn cell_ranks(rows: &[Row]) -> Vec<Option<f64>> {
    let mut cells: BTreeMap<[&str; 4], Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        if r.ok && r.metrics[0].is_some() {
            let k = &r.keys;
            cells.entry([&k[0], &k[1], &k[3], &k[4]]).or_default().push(i);
        }
    }
    let mut ranks = vec![None; rows.len()];
    for members in cells.values() {
        let scores: Vec<f64> = members.iter().map(|&i| rows[i].metrics[0].expect("filtered")).collect();
        for (&i, r) in members.iter().zip(rank_descending(&scores)) {
            ranks[i] = Some(r);
        }
    }
    ranks
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Summary {
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            writer.write_record(row).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

/// Groups rows by `axes`, in order of first appearance.
///
/// Columns: the axes, `n` (successful rows), `n_failed`, then
/// `<metric>_mean` and `<metric>_std` for each metric, then `avg_rank`.
pub fn summarize(rows: &[Row], axes: &[Axis]) -> Summary {
    let ranks = cell_ranks(rows);
    let mut order: Vec<Vec<String>> = Vec::new();
    let mut groups: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        let key: Vec<String> = axes.iter().map(|a| r.keys[a.column()].clone()).collect();
        let members = groups.entry(key.clone()).or_default();
        if members.is_empty() {
            order.push(key);
        }
        members.push(i);
    }

    let mut header: Vec<String> = axes.iter().map(|a| a.name().to_string()).collect();
    header.extend(["n".to_string(), "n_failed".to_string()]);
    for m in METRICS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_std"));
    }
    header.push("avg_rank".to_string());

    let fmt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    let mut out = Vec::with_capacity(order.len());
    for key in order {
        let members = &groups[&key];
        let ok: Vec<usize> = members.iter().copied().filter(|&i| rows[i].ok).collect();
        let mut line = key.clone();
        line.push(ok.len().to_string());
        line.push((members.len() - ok.len()).to_string());
        for m in 0..METRICS.len() {
            let values: Vec<f64> = ok.iter().filter_map(|&i| rows[i].metrics[m]).collect();
            let (mean, std) = mean_std(&values);
            line.push(fmt(mean));
            line.push(fmt(std));
        }
        let group_ranks: Vec<f64> = ok.iter().filter_map(|&i| ranks[i]).collect();
        line.push(fmt(mean_std(&group_ranks).0));
        out.push(line);
    }
    Summary { header, rows: out }
}

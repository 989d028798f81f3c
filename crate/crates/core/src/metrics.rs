//! Accuracy, macro precision, expected calibration error and average rank.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distribution::argmax;
use crate::error::{Error, Result};
use crate::posterior::PosteriorMatrix;

/// Default number of equal-width confidence bins for ECE.
pub const DEFAULT_ECE_BINS: usize = 15;

/// Every metric for one evaluated posterior matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub ece: f64,
    pub n_test: usize,
    /// `counts[true][predicted]`.
    pub counts: Vec<Vec<usize>>,
}

fn check_lengths(rows: usize, labels: usize) -> Result<()> {
    if rows != labels || rows == 0 {
        return Err(Error::DimensionMismatch {
            expected: rows,
            actual: labels,
        });
    }
    Ok(())
}

/// Fraction of rows whose argmax (lowest index on ties) is the true label.
pub fn accuracy(posteriors: &PosteriorMatrix, labels: &[usize]) -> Result<f64> {
    check_lengths(posteriors.n_rows(), labels.len())?;
    let correct = posteriors
        .rows()
        .zip(labels)
        .filter(|(row, &y)| argmax(row) == y)
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

/// `counts[true][predicted]` over `classes` classes.
pub fn count_table(predictions: &[usize], labels: &[usize], classes: usize) -> Result<Vec<Vec<usize>>> {
    check_lengths(predictions.len(), labels.len())?;
    let mut counts = vec![vec![0usize; classes]; classes];
    for (&p, &y) in predictions.iter().zip(labels) {
        for label in [p, y] {
            if label >= classes {
                return Err(Error::OutOfRangeLabel { label, classes });
            }
        }
        counts[y][p] += 1;
    }
    Ok(counts)
}

/// Mean over all classes of `TP / (TP + FP)`; never-predicted classes
/// count as 0.
pub fn macro_precision(predictions: &[usize], labels: &[usize], classes: usize) -> Result<f64> {
    let counts = count_table(predictions, labels, classes)?;
    let total: f64 = (0..classes)
        .map(|c| {
            let predicted: usize = counts.iter().map(|row| row[c]).sum();
            if predicted == 0 {
                0.0
            } else {
                counts[c][c] as f64 / predicted as f64
            }
        })
        .sum();
    Ok(total / classes as f64)
}

/// Expected calibration error over `n_bins` equal-width bins on (0, 1].
pub fn ece(posteriors: &PosteriorMatrix, labels: &[usize], n_bins: usize) -> Result<f64> {
    check_lengths(posteriors.n_rows(), labels.len())?;
    if n_bins == 0 {
        return Err(Error::InvalidConfig("n_bins must be >= 1".into()));
    }
    let mut conf_sum = vec![0.0; n_bins];
    let mut correct = vec![0usize; n_bins];
    let mut size = vec![0usize; n_bins];
    for (row, &y) in posteriors.rows().zip(labels) {
        let pred = argmax(row);
        let conf = row[pred];
        let bin = confidence_bin(conf, n_bins);
        conf_sum[bin] += conf;
        size[bin] += 1;
        if pred == y {
            correct[bin] += 1;
        }
    }
    let n = labels.len() as f64;
    Ok((0..n_bins)
        .filter(|&b| size[b] > 0)
        .map(|b| {
            let m = size[b] as f64;
            (m / n) * (conf_sum[b] / m - correct[b] as f64 / m).abs()
        })
        .sum())
}

/// Bin `b` covers `(b/n, (b+1)/n]`.
fn confidence_bin(conf: f64, n_bins: usize) -> usize {
    let b = (conf * n_bins as f64).ceil() as usize;
    b.saturating_sub(1).min(n_bins - 1)
}

/// Descending ranks starting at 1; ties share the mean of their positions.
pub fn rank_descending(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; scores.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    ranks
}

/// Mean per-dataset rank of every method (1 = best score).
pub fn average_rank(table: &BTreeMap<String, Vec<f64>>) -> Result<BTreeMap<String, f64>> {
    let Some(n_datasets) = table.values().next().map(Vec::len) else {
        return Ok(BTreeMap::new());
    };
    for (method, scores) in table {
        if scores.len() != n_datasets {
            return Err(Error::RaggedTable {
                method: method.clone(),
                expected: n_datasets,
                actual: scores.len(),
            });
        }
    }
    let methods: Vec<&String> = table.keys().collect();
    let mut sums = vec![0.0; methods.len()];
    for d in 0..n_datasets {
        let scores: Vec<f64> = table.values().map(|row| row[d]).collect();
        for (s, r) in sums.iter_mut().zip(rank_descending(&scores)) {
            *s += r;
        }
    }
    let denom = n_datasets.max(1) as f64;
    Ok(methods
        .into_iter()
        .zip(sums)
        .map(|(m, s)| (m.clone(), s / denom))
        .collect())
}

/// Accuracy, macro precision, ECE and the count table in one pass.
pub fn evaluate(posteriors: &PosteriorMatrix, labels: &[usize], n_bins: usize) -> Result<EvaluationResult> {
    let predictions = posteriors.predictions();
    let classes = posteriors.n_classes();
    Ok(EvaluationResult {
        accuracy: accuracy(posteriors, labels)?,
        macro_precision: macro_precision(&predictions, labels, classes)?,
        ece: ece(posteriors, labels, n_bins)?,
        n_test: labels.len(),
        counts: count_table(&predictions, labels, classes)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pm(rows: &[[f64; 2]]) -> PosteriorMatrix {
        PosteriorMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn accuracy_examples() {
        let p = pm(&[[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(accuracy(&p, &[0, 1]).unwrap(), 1.0);
        let p = pm(&[[0.9, 0.1], [0.2, 0.8], [0.7, 0.3], [0.4, 0.6]]);
        assert_eq!(accuracy(&p, &[0, 1, 1, 0]).unwrap(), 0.5);
        let p = pm(&[[0.5, 0.5]]);
        assert_eq!(accuracy(&p, &[0]).unwrap(), 1.0);
        assert!(matches!(accuracy(&p, &[0, 1]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn macro_precision_examples() {
        assert_eq!(macro_precision(&[0, 1, 2], &[0, 1, 2], 3).unwrap(), 1.0);
        assert_eq!(macro_precision(&[0, 0, 0, 0], &[0, 1, 0, 1], 2).unwrap(), 0.25);
        assert!(matches!(macro_precision(&[], &[], 2), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn ece_examples() {
        let p = pm(&[[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(ece(&p, &[0, 1], 15).unwrap(), 0.0);

        // five rows at confidence 0.8, three correct
        let p = pm(&[[0.8, 0.2]; 5]);
        let e = ece(&p, &[0, 0, 0, 1, 1], 1).unwrap();
        assert!((e - 0.2).abs() < 1e-12);
    }

    #[test]
    fn confidence_bins_are_right_closed() {
        assert_eq!(confidence_bin(1.0, 15), 14);
        assert_eq!(confidence_bin(0.5, 2), 0);
        assert_eq!(confidence_bin(0.5000001, 2), 1);
    }

    #[test]
    fn average_rank_examples() {
        let mut t = BTreeMap::new();
        t.insert("a".to_string(), vec![0.9, 0.8]);
        t.insert("b".to_string(), vec![0.7, 0.6]);
        let r = average_rank(&t).unwrap();
        assert_eq!((r["a"], r["b"]), (1.0, 2.0));

        t.insert("b".to_string(), vec![0.9, 0.8]);
        let r = average_rank(&t).unwrap();
        assert_eq!((r["a"], r["b"]), (1.5, 1.5));

        assert_eq!(rank_descending(&[3.0, 2.0, 1.0]), vec![1.0, 2.0, 3.0]);

        t.insert("c".to_string(), vec![0.1]);
        assert!(matches!(average_rank(&t), Err(Error::RaggedTable { .. })));
    }

    #[test]
    fn evaluate_bundles_metrics() {
        let p = pm(&[[0.9, 0.1], [0.3, 0.7], [0.6, 0.4]]);
        let r = evaluate(&p, &[0, 1, 1], DEFAULT_ECE_BINS).unwrap();
        assert_eq!(r.counts, vec![vec![1, 0], vec![1, 1]]);
        // accuracy equals the trace of the row-normalized table weighted by row mass
        let n = r.n_test as f64;
        let trace: f64 = r
            .counts
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mass = row.iter().sum::<usize>() as f64;
                (mass / n) * (row[i] as f64 / mass)
            })
            .sum();
        assert!((trace - r.accuracy).abs() < 1e-15);
    }

    /// Naive ECE: loop over bins, then over every row.
    pub(crate) fn brute_force_ece(p: &PosteriorMatrix, labels: &[usize], n_bins: usize) -> f64 {
        let n = labels.len() as f64;
        let mut total = 0.0;
        for b in 0..n_bins {
            let (mut count, mut conf, mut hit) = (0.0, 0.0, 0.0);
            for (i, row) in p.rows().enumerate() {
                let mut best = 0;
                for c in 1..row.len() {
                    if row[c] > row[best] {
                        best = c;
                    }
                }
                let c = row[best];
                let scaled = c * n_bins as f64;
                if scaled > b as f64 && scaled <= (b + 1) as f64 {
                    count += 1.0;
                    conf += c;
                    if best == labels[i] {
                        hit += 1.0;
                    }
                }
            }
            if count > 0.0 {
                total += count / n * (conf / count - hit / count).abs();
            }
        }
        total
    }

    fn brute_force_precision(pred: &[usize], labels: &[usize], classes: usize) -> f64 {
        let mut sum = 0.0;
        for c in 0..classes {
            let tp = pred.iter().zip(labels).filter(|(&p, &y)| p == c && y == c).count();
            let fp = pred.iter().zip(labels).filter(|(&p, &y)| p == c && y != c).count();
            if tp + fp > 0 {
                sum += tp as f64 / (tp + fp) as f64;
            }
        }
        sum / classes as f64
    }

    fn posterior_strategy() -> impl Strategy<Value = (PosteriorMatrix, Vec<usize>)> {
        (2usize..5, 1usize..80).prop_flat_map(|(c, n)| {
            (
                prop::collection::vec(prop::collection::vec(0.001f64..1.0, c), n),
                prop::collection::vec(0..c, n),
            )
                .prop_map(|(rows, labels)| {
                    let rows: Vec<Vec<f64>> = rows
                        .into_iter()
                        .map(|r| {
                            let s: f64 = r.iter().sum();
                            r.into_iter().map(|v| v / s).collect()
                        })
                        .collect();
                    (PosteriorMatrix::from_rows(&rows).unwrap(), labels)
                })
        })
    }

    proptest! {
        #[test]
        fn ece_matches_brute_force((p, labels) in posterior_strategy(), bins in 1usize..20) {
            let fast = ece(&p, &labels, bins).unwrap();
            let slow = brute_force_ece(&p, &labels, bins);
            prop_assert!((fast - slow).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&fast));
        }

        #[test]
        fn precision_matches_brute_force(
            (pred, labels, c) in (2usize..6, 1usize..100).prop_flat_map(|(c, n)| (
                prop::collection::vec(0..c, n),
                prop::collection::vec(0..c, n),
                Just(c),
            ))
        ) {
            let fast = macro_precision(&pred, &labels, c).unwrap();
            prop_assert!((fast - brute_force_precision(&pred, &labels, c)).abs() < 1e-12);
        }

        #[test]
        fn accuracy_invariant_under_monotone_rescale((p, labels) in posterior_strategy(), power in 0.2f64..5.0) {
            let rescaled: Vec<Vec<f64>> = p
                .rows()
                .map(|r| {
                    let v: Vec<f64> = r.iter().map(|x| x.powf(power)).collect();
                    let s: f64 = v.iter().sum();
                    v.into_iter().map(|x| x / s).collect()
                })
                .collect();
            let q = PosteriorMatrix::from_rows(&rescaled).unwrap();
            // argmax is preserved unless two entries collapse under rounding
            let same = p.predictions() == q.predictions();
            prop_assume!(same);
            prop_assert_eq!(accuracy(&p, &labels).unwrap(), accuracy(&q, &labels).unwrap());
        }

        #[test]
        fn rank_sums(scores in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 1..6), 2..6)) {
            let n = scores.iter().map(Vec::len).min().unwrap();
            let table: BTreeMap<String, Vec<f64>> = scores
                .iter()
                .enumerate()
                .map(|(i, s)| (format!("m{i}"), s[..n].to_vec()))
                .collect();
            let m = table.len() as f64;
            let ranks = average_rank(&table).unwrap();
            for r in ranks.values() {
                prop_assert!(*r >= 1.0 && *r <= m);
            }
            for d in 0..n {
                let col: Vec<f64> = table.values().map(|s| s[d]).collect();
                let total: f64 = rank_descending(&col).iter().sum();
                prop_assert!((total - m * (m + 1.0) / 2.0).abs() < 1e-12);
            }
        }
    }
}

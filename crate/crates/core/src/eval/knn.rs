use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: i64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of test points whose true label is `label`.
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnResult {
    pub predicted: Vec<i64>,
    pub accuracy: f64,
    /// Support-weighted mean of the per-class F1 scores.
    pub weighted_f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn vote(neighbours: &[(f64, usize)], labels: &[i64]) -> i64 {
    // label → (count, summed distance)
    let mut tally: BTreeMap<i64, (usize, f64)> = BTreeMap::new();
    for &(dist_sq, idx) in neighbours {
        let e = tally.entry(labels[idx]).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += dist_sq.sqrt();
    }
    // BTreeMap iterates labels in ascending order, so the first strict winner is the smallest label.
    let mut best: Option<(i64, usize, f64)> = None;
    for (label, (count, dist)) in tally {
        let better = match best {
            None => true,
            Some((_, c, d)) => count > c || (count == c && dist < d),
        };
        if better {
            best = Some((label, count, dist));
        }
    }
    best.expect("at least one neighbour").0
}

/// Brute-force Euclidean `k`-nearest-neighbour labels for each row of `test`.
///
/// Majority vote; a tie goes to the label with the smaller summed distance, then to the
/// smaller label. Equidistant neighbours are taken in training order.
pub fn knn_predict(train: &Matrix, labels: &[i64], test: &Matrix, k: usize) -> Result<Vec<i64>> {
    if labels.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if labels.len() != train.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} training rows but {} labels",
            train.rows(),
            labels.len()
        )));
    }
    if train.cols() != test.cols() {
        return Err(Error::DimensionMismatch(format!(
            "training points have {} features, test points {}",
            train.cols(),
            test.cols()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let k = k.min(train.rows());
    Ok((0..test.rows())
        .into_par_iter()
        .map(|i| {
            let q = test.row(i);
            let mut dists: Vec<(f64, usize)> = (0..train.rows())
                .map(|j| (squared_distance(q, train.row(j)), j))
                .collect();
            dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            vote(&dists[..k], labels)
        })
        .collect())
}

/// Accuracy, support-weighted F1 and per-class scores. Undefined ratios (0/0) count as 0.
pub fn classification_metrics(predicted: &[i64], truth: &[i64]) -> Result<KnnResult> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    let n = truth.len();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };

    // label → (true positives, predicted count, support)
    let mut counts: BTreeMap<i64, (usize, usize, usize)> = BTreeMap::new();
    for (&p, &t) in predicted.iter().zip(truth) {
        counts.entry(p).or_default().1 += 1;
        let e = counts.entry(t).or_default();
        e.2 += 1;
        if p == t {
            e.0 += 1;
        }
    }
    let per_class: Vec<ClassMetrics> = counts
        .into_iter()
        .map(|(label, (tp, predicted, support))| {
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                label,
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect();
    let correct = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    let weighted_f1 = per_class
        .iter()
        .map(|c| ratio(c.support, n) * c.f1)
        .sum();
    Ok(KnnResult {
        predicted: predicted.to_vec(),
        accuracy: ratio(correct, n),
        weighted_f1,
        per_class,
    })
}

/// [`knn_predict`] followed by [`classification_metrics`] against `test_labels`.
pub fn knn_classify(
    train: &Matrix,
    labels: &[i64],
    test: &Matrix,
    test_labels: &[i64],
    k: usize,
) -> Result<KnnResult> {
    let predicted = knn_predict(train, labels, test, k)?;
    classification_metrics(&predicted, test_labels)
}

//! Scoring a found pattern set against a planted one.
//!
//! Patterns are compared as flat item sets; clause structure and label sides
//! are ignored. Duplicate item sets on either side count once.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternSetComparison {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub soft_precision: f64,
    pub soft_recall: f64,
    pub soft_f1: f64,
    /// For every truth pattern (deduplicated, in sorted order), the best
    /// `|p_d ∩ p_g| / |p_g|` over found patterns.
    pub best_overlap: Vec<f64>,
}

/// Exact-match scores `(precision, recall, f1)`, where
/// `f1 = |P_d ∩ P_g| / (|P_d ∩ P_g| + ½|P_d △ P_g|)`.
pub fn exact_f1<T: Ord + Clone>(found: &[BTreeSet<T>], truth: &[BTreeSet<T>]) -> (f64, f64, f64) {
    let found: BTreeSet<&BTreeSet<T>> = found.iter().collect();
    let truth: BTreeSet<&BTreeSet<T>> = truth.iter().collect();
    match (found.is_empty(), truth.is_empty()) {
        (true, true) => return (1.0, 1.0, 1.0),
        (true, false) | (false, true) => return (0.0, 0.0, 0.0),
        _ => {}
    }
    let common = found.intersection(&truth).count() as f64;
    let sym = (found.len() + truth.len()) as f64 - 2.0 * common;
    let precision = common / found.len() as f64;
    let recall = common / truth.len() as f64;
    (precision, recall, common / (common + 0.5 * sym))
}

/// Soft scores `(soft precision, soft recall, soft f1, best overlap per truth
/// pattern)`. Both sides normalize the overlap by the truth pattern's size.
pub fn soft_f1<T: Ord + Clone>(found: &[BTreeSet<T>], truth: &[BTreeSet<T>]) -> (f64, f64, f64, Vec<f64>) {
    let found: Vec<&BTreeSet<T>> = found.iter().collect::<BTreeSet<_>>().into_iter().collect();
    let truth: Vec<&BTreeSet<T>> = truth.iter().collect::<BTreeSet<_>>().into_iter().collect();
    let frac = |d: &BTreeSet<T>, g: &BTreeSet<T>| {
        if g.is_empty() {
            0.0
        } else {
            d.intersection(g).count() as f64 / g.len() as f64
        }
    };
    let best_overlap: Vec<f64> = truth
        .iter()
        .map(|g| found.iter().map(|d| frac(d, g)).fold(0.0, f64::max))
        .collect();
    match (found.is_empty(), truth.is_empty()) {
        (true, true) => return (1.0, 1.0, 1.0, best_overlap),
        (true, false) | (false, true) => return (0.0, 0.0, 0.0, best_overlap),
        _ => {}
    }
    let precision = found
        .iter()
        .map(|d| truth.iter().map(|g| frac(d, g)).fold(0.0, f64::max))
        .sum::<f64>()
        / found.len() as f64;
    let recall = best_overlap.iter().sum::<f64>() / truth.len() as f64;
    (precision, recall, harmonic(precision, recall), best_overlap)
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn compare<T: Ord + Clone>(found: &[BTreeSet<T>], truth: &[BTreeSet<T>]) -> PatternSetComparison {
    let (precision, recall, f1) = exact_f1(found, truth);
    let (soft_precision, soft_recall, soft_f1, best_overlap) = soft_f1(found, truth);
    PatternSetComparison {
        precision,
        recall,
        f1,
        soft_precision,
        soft_recall,
        soft_f1,
        best_overlap,
    }
}

/// Mean and standard error of the mean; the error is 0 for fewer than two
/// scores.
pub fn mean_stderr(scores: &[f64]) -> (f64, f64) {
    if scores.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    if scores.len() < 2 {
        return (mean, 0.0);
    }
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

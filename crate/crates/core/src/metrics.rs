//! Accuracy, confusion matrix, miss rate and benign-vs-attack F1.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{predictions} predictions for {truth} labels")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("class id {id} outside 0..{n_classes}")]
    ClassOutOfRange { id: usize, n_classes: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    /// Fraction of benign predictions whose true class is an attack.
    pub miss_rate: f64,
    /// F1 with every non-benign class collapsed into a positive "attack".
    pub f1_attack: f64,
    pub precision_attack: f64,
    pub recall_attack: f64,
    pub benign_class: usize,
    pub n_samples: usize,
    /// Rows are true classes, columns predictions.
    pub confusion: Vec<Vec<u64>>,
    pub support: Vec<u64>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores `predictions` against `truth` over `n_classes` classes.
pub fn evaluate(
    predictions: &[usize],
    truth: &[usize],
    n_classes: usize,
    benign_class: usize,
) -> Result<MetricsReport, MetricsError> {
    if predictions.len() != truth.len() {
        return Err(MetricsError::LengthMismatch { predictions: predictions.len(), truth: truth.len() });
    }
    if predictions.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&id) = predictions.iter().chain(truth).chain([&benign_class]).find(|&&c| c >= n_classes) {
        return Err(MetricsError::ClassOutOfRange { id, n_classes });
    }
    let mut confusion = vec![vec![0u64; n_classes]; n_classes];
    let (mut tp, mut fp, mut fn_, mut missed, mut benign_preds) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for (&p, &t) in predictions.iter().zip(truth) {
        confusion[t][p] += 1;
        let (pa, ta) = (p != benign_class, t != benign_class);
        match (pa, ta) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => {
                fn_ += 1;
                missed += 1;
            }
            (false, false) => {}
        }
        if !pa {
            benign_preds += 1;
        }
    }
    let correct: u64 = (0..n_classes).map(|c| confusion[c][c]).sum();
    let n = predictions.len() as u64;
    Ok(MetricsReport {
        accuracy: ratio(correct, n),
        miss_rate: ratio(missed, benign_preds),
        f1_attack: ratio(2 * tp, 2 * tp + fp + fn_),
        precision_attack: ratio(tp, tp + fp),
        recall_attack: ratio(tp, tp + fn_),
        benign_class,
        n_samples: predictions.len(),
        support: confusion.iter().map(|r| r.iter().sum()).collect(),
        confusion,
    })
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn to_table(&self, class_names: &[String]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "accuracy   {:.6}", self.accuracy);
        let _ = writeln!(s, "miss_rate  {:.6}", self.miss_rate);
        let _ = writeln!(s, "f1_attack  {:.6}", self.f1_attack);
        let _ = writeln!(s, "samples    {}", self.n_samples);
        let name = |c: usize| class_names.get(c).cloned().unwrap_or_else(|| c.to_string());
        let width = (0..self.confusion.len()).map(|c| name(c).len()).max().unwrap_or(0).max(8);
        let _ = write!(s, "\n{:<width$}", "truth\\pred");
        for c in 0..self.confusion.len() {
            let _ = write!(s, " {:>width$}", name(c));
        }
        let _ = writeln!(s, " {:>width$}", "support");
        for (c, row) in self.confusion.iter().enumerate() {
            let _ = write!(s, "{:<width$}", name(c));
            for v in row {
                let _ = write!(s, " {v:>width$}");
            }
            let _ = writeln!(s, " {:>width$}", self.support[c]);
        }
        s
    }
}

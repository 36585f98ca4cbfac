use serde::{Deserialize, Serialize};

use super::{fit, GbdtError, HyperParams};
use crate::tabular::Dataset;

/// Leaf budget coupled to depth: `floor(2/3 * 2^max_depth)`.
pub fn num_leaves_for_depth(max_depth: usize) -> usize {
    ((1u128 << (max_depth + 1)) / 3).min(usize::MAX as u128) as usize
}

/// Search ranges. `num_leaves: None` derives the leaf budget from depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub n_estimators: Vec<usize>,
    pub max_depth: Vec<usize>,
    #[serde(default)]
    pub num_leaves: Option<Vec<usize>>,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_min_samples_leaf")]
    pub min_samples_leaf: usize,
}

fn default_learning_rate() -> f64 {
    0.1
}

fn default_lambda() -> f64 {
    1.0
}

fn default_min_samples_leaf() -> usize {
    1
}

impl HyperGrid {
    /// `n_estimators` 30..=200 step 10, `max_depth` 4..=10, derived leaves.
    pub fn standard() -> Self {
        Self {
            n_estimators: (30..=200).step_by(10).collect(),
            max_depth: (4..=10).collect(),
            num_leaves: None,
            learning_rate: default_learning_rate(),
            lambda: default_lambda(),
            min_samples_leaf: default_min_samples_leaf(),
        }
    }

    /// Valid grid points sorted by `(n_estimators, max_depth, num_leaves)`.
    /// Pinned leaf counts above `2^max_depth` are skipped.
    pub fn points(&self) -> Vec<HyperParams> {
        let mut points = Vec::new();
        for &t in &self.n_estimators {
            for &depth in &self.max_depth {
                let leaves = match &self.num_leaves {
                    Some(l) => l.clone(),
                    None => vec![num_leaves_for_depth(depth)],
                };
                for num_leaves in leaves {
                    let hp = HyperParams {
                        n_estimators: t,
                        max_depth: depth,
                        num_leaves,
                        learning_rate: self.learning_rate,
                        lambda: self.lambda,
                        min_samples_leaf: self.min_samples_leaf,
                    };
                    if hp.validate().is_ok() {
                        points.push(hp);
                    }
                }
            }
        }
        points.sort_by_key(|h| (h.n_estimators, h.max_depth, h.num_leaves));
        points.dedup();
        points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub hyper: HyperParams,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: HyperParams,
    pub table: Vec<GridEntry>,
}

/// Fits one forest per grid point and keeps the most accurate on
/// `valid`. Ties go to the lexicographically smallest point.
pub fn grid_search(train: &Dataset, valid: &Dataset, grid: &HyperGrid) -> Result<GridResult, GbdtError> {
    if train.class_names() != valid.class_names() {
        return Err(GbdtError::ClassDictionaryMismatch);
    }
    let points = grid.points();
    if points.is_empty() {
        return Err(GbdtError::EmptyGrid);
    }
    let mut table = Vec::with_capacity(points.len());
    let mut best: Option<(HyperParams, f64)> = None;
    for hyper in points {
        let accuracy = fit(train, &hyper)?.accuracy(valid)?;
        if best.is_none_or(|(_, a)| accuracy > a) {
            best = Some((hyper, accuracy));
        }
        table.push(GridEntry { hyper, accuracy });
    }
    Ok(GridResult { best: best.expect("non-empty grid").0, table })
}

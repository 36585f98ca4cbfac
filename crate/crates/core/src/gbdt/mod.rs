//! Multiclass gradient-boosted decision trees.
//!
//! Each boosting round fits one regression tree per class on the softmax
//! cross-entropy gradients. Trees grow leaf-wise (best gain first) under a
//! leaf-count and a depth cap, with exact split enumeration and a learned
//! direction for missing values at every split.

mod forest;
mod grid;
mod grow;
mod rules;
mod tree;

pub use forest::{fit, fit_traced, log_loss, softmax, Forest, Prediction};
pub use grid::{grid_search, num_leaves_for_depth, GridEntry, GridResult, HyperGrid};
pub use rules::{extract_rules, Branch, Condition, Rule};
pub use tree::TreeNode;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GbdtError {
    #[error("cannot fit on an empty dataset")]
    EmptyDataset,
    #[error("dataset has no classes")]
    NoClasses,
    #[error("expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyper(String),
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("training and validation class dictionaries differ")]
    ClassDictionaryMismatch,
    #[error("unsupported forest document: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Boosting rounds; each round adds one tree per class.
    pub n_estimators: usize,
    pub max_depth: usize,
    pub num_leaves: usize,
    pub learning_rate: f64,
    /// L2 regulariser on leaf values.
    pub lambda: f64,
    pub min_samples_leaf: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self::with_depth(50, 6)
    }
}

impl HyperParams {
    /// Defaults with `num_leaves` derived from `max_depth`.
    pub fn with_depth(n_estimators: usize, max_depth: usize) -> Self {
        Self {
            n_estimators,
            max_depth,
            num_leaves: num_leaves_for_depth(max_depth),
            learning_rate: 0.1,
            lambda: 1.0,
            min_samples_leaf: 1,
        }
    }

    pub fn validate(&self) -> Result<(), GbdtError> {
        let bad = |msg: String| Err(GbdtError::InvalidHyper(msg));
        if self.max_depth == 0 || self.max_depth > 62 {
            return bad(format!("max_depth must lie in 1..=62, got {}", self.max_depth));
        }
        if self.num_leaves == 0 || self.num_leaves as u128 > 1u128 << self.max_depth {
            return bad(format!(
                "num_leaves {} must lie in 1..=2^max_depth ({})",
                self.num_leaves,
                1u128 << self.max_depth
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be at least 1".into());
        }
        Ok(())
    }
}

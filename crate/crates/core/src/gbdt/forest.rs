use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grow::{grow_tree, FeatureIndex};
use super::{GbdtError, HyperParams, TreeNode};
use crate::tabular::Dataset;

const FORMAT: &str = "fedforest.forest";
const VERSION: u32 = 1;

/// A trained multiclass GBDT: `trees[c][t]` is round `t`'s tree for class `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    class_names: Vec<String>,
    feature_names: Vec<String>,
    hyper: HyperParams,
    base_score: f64,
    trees: Vec<Vec<TreeNode>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub class: usize,
}

#[derive(Serialize, Deserialize)]
struct ForestDocument {
    format: String,
    version: u32,
    forest: Forest,
}

impl Forest {
    /// Assembles a forest from explicit trees. Every class must carry the
    /// same number of trees and every split must reference a known feature.
    pub fn from_trees(
        class_names: Vec<String>,
        feature_names: Vec<String>,
        hyper: HyperParams,
        base_score: f64,
        trees: Vec<Vec<TreeNode>>,
    ) -> Result<Self, GbdtError> {
        let forest = Self { class_names, feature_names, hyper, base_score, trees };
        forest.check()?;
        Ok(forest)
    }

    fn check(&self) -> Result<(), GbdtError> {
        if self.class_names.is_empty() {
            return Err(GbdtError::NoClasses);
        }
        if self.trees.len() != self.class_names.len() {
            return Err(GbdtError::Format(format!(
                "{} tree lists for {} classes",
                self.trees.len(),
                self.class_names.len()
            )));
        }
        let rounds = self.trees[0].len();
        if self.trees.iter().any(|t| t.len() != rounds) {
            return Err(GbdtError::Format("classes carry different tree counts".into()));
        }
        let m = self.feature_names.len();
        let bad = self.trees.iter().flatten().any(|t| t.max_feature_index().is_some_and(|f| f >= m));
        if bad {
            return Err(GbdtError::Format(format!("split on a feature index >= {m}")));
        }
        Ok(())
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Trees per class.
    pub fn n_rounds(&self) -> usize {
        self.trees.first().map_or(0, Vec::len)
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    pub fn learning_rate(&self) -> f64 {
        self.hyper.learning_rate
    }

    pub fn base_score(&self) -> f64 {
        self.base_score
    }

    pub fn trees(&self) -> &[Vec<TreeNode>] {
        &self.trees
    }

    /// Total leaves over all trees, the forest's parameter count.
    pub fn n_leaves(&self) -> usize {
        self.trees.iter().flatten().map(TreeNode::n_leaves).sum()
    }

    pub fn logits(&self, row: &[Option<f64>]) -> Result<Vec<f64>, GbdtError> {
        if row.len() != self.n_features() {
            return Err(GbdtError::DimensionMismatch { expected: self.n_features(), found: row.len() });
        }
        Ok(self
            .trees
            .iter()
            .map(|class_trees| {
                let mut s = self.base_score;
                for t in class_trees {
                    s += t.evaluate(row);
                }
                s
            })
            .collect())
    }

    pub fn predict(&self, row: &[Option<f64>]) -> Result<Prediction, GbdtError> {
        let logits = self.logits(row)?;
        let probs = softmax(&logits);
        let class = argmax(&probs);
        Ok(Prediction { logits, probs, class })
    }

    pub fn predict_classes(&self, d: &Dataset) -> Result<Vec<usize>, GbdtError> {
        d.rows().map(|r| self.predict(r).map(|p| p.class)).collect()
    }

    pub fn accuracy(&self, d: &Dataset) -> Result<f64, GbdtError> {
        let preds = self.predict_classes(d)?;
        let hits = preds.iter().zip(d.labels()).filter(|(p, y)| p == y).count();
        Ok(if preds.is_empty() { 0.0 } else { hits as f64 / preds.len() as f64 })
    }

    /// Versioned JSON document with fixed key order.
    pub fn to_json(&self) -> String {
        let doc = ForestDocument { format: FORMAT.into(), version: VERSION, forest: self.clone() };
        serde_json::to_string_pretty(&doc).expect("forest serialises")
    }

    pub fn from_json(s: &str) -> Result<Self, GbdtError> {
        let doc: ForestDocument = serde_json::from_str(s)?;
        if doc.format != FORMAT || doc.version != VERSION {
            return Err(GbdtError::Format(format!("{} v{}", doc.format, doc.version)));
        }
        doc.forest.check()?;
        Ok(doc.forest)
    }
}

/// Softmax with max-subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// First index of the maximum, so ties go to the lower class id.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn fit(d: &Dataset, hyper: &HyperParams) -> Result<Forest, GbdtError> {
    fit_traced(d, hyper).map(|(forest, _)| forest)
}

/// Fits a forest and returns the mean training log-loss before the first
/// round and after every round (`n_estimators + 1` values).
///
/// Training has no stochastic component: the same data and
/// hyperparameters always give the same forest.
pub fn fit_traced(d: &Dataset, hyper: &HyperParams) -> Result<(Forest, Vec<f64>), GbdtError> {
    hyper.validate()?;
    if d.n_samples() == 0 {
        return Err(GbdtError::EmptyDataset);
    }
    let n_classes = d.n_classes();
    if n_classes == 0 {
        return Err(GbdtError::NoClasses);
    }
    let n = d.n_samples();
    let base_score = 0.0;
    let index = FeatureIndex::new(d);
    let labels = d.labels();
    let mut scores = vec![base_score; n * n_classes];
    let mut trees: Vec<Vec<TreeNode>> = vec![Vec::with_capacity(hyper.n_estimators); n_classes];
    let mut losses = Vec::with_capacity(hyper.n_estimators + 1);
    losses.push(mean_log_loss(&scores, labels, n_classes));

    for _ in 0..hyper.n_estimators {
        let probs: Vec<f64> = scores.chunks(n_classes).flat_map(softmax).collect();
        let grown: Vec<_> = (0..n_classes)
            .into_par_iter()
            .map(|c| {
                let mut grad = Vec::with_capacity(n);
                let mut hess = Vec::with_capacity(n);
                for i in 0..n {
                    let p = probs[i * n_classes + c];
                    grad.push(if labels[i] == c { p - 1.0 } else { p });
                    hess.push(p * (1.0 - p));
                }
                grow_tree(&index, &grad, &hess, hyper)
            })
            .collect();
        for (c, tree) in grown.into_iter().enumerate() {
            for (rows, value) in &tree.leaves {
                for &r in rows {
                    scores[r as usize * n_classes + c] += value;
                }
            }
            trees[c].push(tree.root);
        }
        losses.push(mean_log_loss(&scores, labels, n_classes));
    }

    let forest = Forest {
        class_names: d.class_names().to_vec(),
        feature_names: d.feature_names().to_vec(),
        hyper: *hyper,
        base_score,
        trees,
    };
    Ok((forest, losses))
}

fn mean_log_loss(scores: &[f64], labels: &[usize], n_classes: usize) -> f64 {
    let total: f64 = scores
        .chunks(n_classes)
        .zip(labels)
        .map(|(z, &y)| {
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
            lse - z[y]
        })
        .sum();
    total / labels.len() as f64
}

/// Mean multiclass log-loss of `forest` on `d`.
pub fn log_loss(forest: &Forest, d: &Dataset) -> Result<f64, GbdtError> {
    let k = forest.n_classes();
    let mut scores = Vec::with_capacity(d.n_samples() * k);
    for row in d.rows() {
        scores.extend(forest.logits(row)?);
    }
    Ok(mean_log_loss(&scores, d.labels(), k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn threshold_data() -> Dataset {
        // 200 points on a grid over [-1, 1), class = 1{x > 0}.
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![-1.0 + i as f64 / 100.0]).collect();
        let labels = rows.iter().map(|r| usize::from(r[0] > 0.0)).collect();
        Dataset::from_dense(rows, labels, names("c", 2)).unwrap()
    }

    #[test]
    fn two_tree_logit_sums_leaf_scores() {
        let tree = |v_left: f64, v_right: f64| TreeNode::Split {
            feature: 0,
            threshold: 15.0,
            missing_goes_left: true,
            left: Box::new(TreeNode::leaf(v_left)),
            right: Box::new(TreeNode::leaf(v_right)),
        };
        let forest = Forest::from_trees(
            names("c", 2),
            vec!["age".into()],
            HyperParams::default(),
            0.0,
            vec![vec![tree(10.0, -1.0), tree(5.0, -2.0)], vec![TreeNode::leaf(0.0); 2]],
        )
        .unwrap();
        let p = forest.predict(&[Some(12.0)]).unwrap();
        assert_eq!(p.logits[0], 15.0);
    }

    #[test]
    fn zero_rounds_is_uniform() {
        let d = threshold_data();
        let hyper = HyperParams { n_estimators: 0, ..HyperParams::default() };
        let f = fit(&d, &hyper).unwrap();
        let p = f.predict(&[Some(0.3)]).unwrap();
        assert_eq!(p.probs, vec![0.5, 0.5]);
        assert_eq!(p.class, 0);
    }

    #[test]
    fn single_class_predicts_certainty() {
        let rows = (0..20).map(|i| vec![i as f64]).collect();
        let d = Dataset::from_dense(rows, vec![0; 20], names("c", 1)).unwrap();
        let f = fit(&d, &HyperParams::with_depth(30, 3)).unwrap();
        for x in [-5.0, 3.0, 100.0] {
            let p = f.predict(&[Some(x)]).unwrap();
            assert!((p.probs[0] - 1.0).abs() < 1e-3);
        }
        assert!((f.predict(&[None]).unwrap().probs[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn stumps_learn_threshold_rule() {
        let d = threshold_data();
        let hyper = HyperParams { n_estimators: 10, max_depth: 1, num_leaves: 2, learning_rate: 0.3, ..HyperParams::default() };
        let f = fit(&d, &hyper).unwrap();
        assert_eq!(f.accuracy(&d).unwrap(), 1.0);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let d = threshold_data();
        let f = fit(&d, &HyperParams::with_depth(5, 2)).unwrap();
        for x in [-3.0, -0.2, 0.0, 0.7] {
            let s: f64 = f.predict(&[Some(x)]).unwrap().probs.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn all_zero_forest_ties_to_class_zero() {
        let f = Forest::from_trees(
            names("c", 3),
            names("f", 1),
            HyperParams::default(),
            0.0,
            vec![vec![TreeNode::leaf(0.0)]; 3],
        )
        .unwrap();
        let p = f.predict(&[Some(1.0)]).unwrap();
        assert_eq!(p.class, 0);
        assert!(p.probs.iter().all(|&q| (q - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn dimension_mismatch() {
        let f = fit(&threshold_data(), &HyperParams::with_depth(1, 1)).unwrap();
        assert!(matches!(
            f.predict(&[Some(1.0), Some(2.0)]),
            Err(GbdtError::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn missing_values_learn_a_direction() {
        // Missing cells belong to class 1, which otherwise sits at x > 0.
        let mut rows: Vec<Vec<Option<f64>>> = (0..40).map(|i| vec![Some(i as f64 - 20.0)]).collect();
        let mut labels: Vec<usize> = rows.iter().map(|r| usize::from(r[0].unwrap() > 0.0)).collect();
        rows.extend((0..10).map(|_| vec![None]));
        labels.extend([1; 10]);
        let d = Dataset::from_rows(names("f", 1), rows, labels, names("c", 2)).unwrap();
        let f = fit(&d, &HyperParams::with_depth(20, 2)).unwrap();
        assert_eq!(f.predict(&[None]).unwrap().class, 1);
        assert_eq!(f.accuracy(&d).unwrap(), 1.0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let f = fit(&threshold_data(), &HyperParams::with_depth(5, 3)).unwrap();
        let s = f.to_json();
        let back = Forest::from_json(&s).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_json(), s);
    }

    #[test]
    fn rejects_wrong_format_tag() {
        let s = fit(&threshold_data(), &HyperParams::with_depth(1, 1)).unwrap().to_json();
        let s = s.replace("fedforest.forest", "something.else");
        assert!(matches!(Forest::from_json(&s), Err(GbdtError::Format(_))));
    }
}

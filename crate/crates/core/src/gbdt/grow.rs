//! Leaf-wise growth of one regression tree from per-sample gradients and
//! hessians.

use rayon::prelude::*;

use super::{HyperParams, TreeNode};
use crate::tabular::Dataset;

/// Column-major view of a dataset with each feature's present rows
/// presorted by `(value, row)`. Built once per fit and shared by all trees.
pub(crate) struct FeatureIndex {
    columns: Vec<Vec<f64>>,
    sorted: Vec<Vec<u32>>,
    n_rows: usize,
}

impl FeatureIndex {
    pub fn new(d: &Dataset) -> Self {
        let n = d.n_samples();
        let columns: Vec<Vec<f64>> = (0..d.n_features())
            .map(|j| (0..n).map(|i| d.cell(i, j).unwrap_or(f64::NAN)).collect())
            .collect();
        let sorted = columns
            .iter()
            .map(|col| {
                let mut rows: Vec<u32> =
                    (0..n as u32).filter(|&r| !col[r as usize].is_nan()).collect();
                rows.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                rows
            })
            .collect();
        Self { columns, sorted, n_rows: n }
    }

    fn n_features(&self) -> usize {
        self.columns.len()
    }
}

pub(crate) struct GrownTree {
    pub root: TreeNode,
    /// Rows reaching each leaf together with the leaf output.
    pub leaves: Vec<(Vec<u32>, f64)>,
}

#[derive(Debug, Clone, Copy)]
struct SplitCandidate {
    feature: usize,
    threshold: f64,
    missing_goes_left: bool,
    gain: f64,
}

struct OpenNode {
    slot: usize,
    depth: usize,
    rows: Vec<u32>,
    sorted: Vec<Vec<u32>>,
    grad: f64,
    hess: f64,
    split: Option<SplitCandidate>,
}

enum Slot {
    Leaf(f64),
    Split { feature: usize, threshold: f64, missing_goes_left: bool, left: usize, right: usize },
}

/// Below this many `rows * features`, split search stays on one thread.
const PARALLEL_WORK: usize = 1 << 15;

struct Grower<'a> {
    index: &'a FeatureIndex,
    grad: &'a [f64],
    hess: &'a [f64],
    hyper: &'a HyperParams,
}

pub(crate) fn grow_tree(
    index: &FeatureIndex,
    grad: &[f64],
    hess: &[f64],
    hyper: &HyperParams,
) -> GrownTree {
    let g = Grower { index, grad, hess, hyper };
    let rows: Vec<u32> = (0..index.n_rows as u32).collect();
    let mut root = g.open_node(0, 0, rows, index.sorted.clone());
    let mut arena = vec![Slot::Leaf(g.leaf_value(root.grad, root.hess))];
    root.split = g.best_split(&root);
    let mut open = vec![root];
    let mut in_left = vec![false; index.n_rows];
    let mut n_leaves = 1;

    while n_leaves < hyper.num_leaves {
        // Best gain first; equal gains go to the earliest-created leaf.
        let mut pick: Option<(usize, f64, usize)> = None;
        for (k, node) in open.iter().enumerate() {
            if let Some(s) = node.split {
                let better = match pick {
                    None => true,
                    Some((_, gain, slot)) => s.gain > gain || (s.gain == gain && node.slot < slot),
                };
                if better {
                    pick = Some((k, s.gain, node.slot));
                }
            }
        }
        let Some((k, _, _)) = pick else { break };
        let node = open.swap_remove(k);
        let parent_slot = node.slot;
        let split = node.split.expect("picked node has a split");
        let (left, right) = g.partition(node, split, &mut in_left, arena.len());
        arena[parent_slot] = Slot::Split {
            feature: split.feature,
            threshold: split.threshold,
            missing_goes_left: split.missing_goes_left,
            left: left.slot,
            right: right.slot,
        };
        arena.push(Slot::Leaf(g.leaf_value(left.grad, left.hess)));
        arena.push(Slot::Leaf(g.leaf_value(right.grad, right.hess)));
        for mut child in [left, right] {
            child.split = g.best_split(&child);
            if child.split.is_none() {
                child.sorted = Vec::new();
            }
            open.push(child);
        }
        n_leaves += 1;
    }

    open.sort_by_key(|n| n.slot);
    let leaves = open
        .into_iter()
        .map(|n| {
            let value = match arena[n.slot] {
                Slot::Leaf(v) => v,
                Slot::Split { .. } => unreachable!("open nodes are leaves"),
            };
            (n.rows, value)
        })
        .collect();
    GrownTree { root: build(&arena, 0), leaves }
}

fn build(arena: &[Slot], slot: usize) -> TreeNode {
    match arena[slot] {
        Slot::Leaf(value) => TreeNode::Leaf { value },
        Slot::Split { feature, threshold, missing_goes_left, left, right } => TreeNode::Split {
            feature,
            threshold,
            missing_goes_left,
            left: Box::new(build(arena, left)),
            right: Box::new(build(arena, right)),
        },
    }
}

impl Grower<'_> {
    fn open_node(&self, slot: usize, depth: usize, rows: Vec<u32>, sorted: Vec<Vec<u32>>) -> OpenNode {
        let (grad, hess) = self.sums(&rows);
        OpenNode { slot, depth, rows, sorted, grad, hess, split: None }
    }

    fn sums(&self, rows: &[u32]) -> (f64, f64) {
        rows.iter().fold((0.0, 0.0), |(g, h), &r| {
            (g + self.grad[r as usize], h + self.hess[r as usize])
        })
    }

    fn leaf_value(&self, grad: f64, hess: f64) -> f64 {
        -grad / (hess + self.hyper.lambda) * self.hyper.learning_rate
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.hyper.lambda)
    }

    fn best_split(&self, node: &OpenNode) -> Option<SplitCandidate> {
        let msl = self.hyper.min_samples_leaf;
        if node.depth >= self.hyper.max_depth || node.rows.len() < 2 * msl {
            return None;
        }
        let m = self.index.n_features();
        let per_feature: Vec<Option<SplitCandidate>> = if node.rows.len() * m >= PARALLEL_WORK {
            (0..m).into_par_iter().map(|f| self.best_split_on(node, f)).collect()
        } else {
            (0..m).map(|f| self.best_split_on(node, f)).collect()
        };
        // Lowest feature index wins ties.
        per_feature.into_iter().flatten().fold(None, |best: Option<SplitCandidate>, c| match best {
            Some(b) if b.gain >= c.gain => Some(b),
            _ => Some(c),
        })
    }

    fn best_split_on(&self, node: &OpenNode, feature: usize) -> Option<SplitCandidate> {
        let col = &self.index.columns[feature];
        let sorted = &node.sorted[feature];
        if sorted.len() < 2 {
            return None;
        }
        let n = node.rows.len();
        let n_missing = n - sorted.len();
        let (g_miss, h_miss) = if n_missing == 0 {
            (0.0, 0.0)
        } else {
            node.rows.iter().filter(|&&r| col[r as usize].is_nan()).fold((0.0, 0.0), |(g, h), &r| {
                (g + self.grad[r as usize], h + self.hess[r as usize])
            })
        };
        let (g_all, h_all) = (node.grad, node.hess);
        let parent = self.score(g_all, h_all);
        let msl = self.hyper.min_samples_leaf;

        let mut best: Option<SplitCandidate> = None;
        let (mut gl, mut hl) = (0.0, 0.0);
        for i in 0..sorted.len() - 1 {
            let r = sorted[i] as usize;
            gl += self.grad[r];
            hl += self.hess[r];
            let lo = col[r];
            let hi = col[sorted[i + 1] as usize];
            if lo == hi {
                continue;
            }
            let threshold = midpoint(lo, hi);
            let n_present_left = i + 1;
            // Missing-left is tried first so it wins ties.
            let options: &[bool] = if n_missing == 0 { &[true] } else { &[true, false] };
            for &missing_left in options {
                let (g_left, h_left, n_left) = if missing_left {
                    (gl + g_miss, hl + h_miss, n_present_left + n_missing)
                } else {
                    (gl, hl, n_present_left)
                };
                if n_left < msl || n - n_left < msl {
                    continue;
                }
                let gain = 0.5
                    * (self.score(g_left, h_left) + self.score(g_all - g_left, h_all - h_left)
                        - parent);
                if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                    best = Some(SplitCandidate {
                        feature,
                        threshold,
                        missing_goes_left: missing_left,
                        gain,
                    });
                }
            }
        }
        best
    }

    /// Splits `node` into children occupying arena slots `next_slot` and
    /// `next_slot + 1`. Sorted lists stay sorted under a stable partition.
    fn partition(
        &self,
        node: OpenNode,
        split: SplitCandidate,
        in_left: &mut [bool],
        next_slot: usize,
    ) -> (OpenNode, OpenNode) {
        let col = &self.index.columns[split.feature];
        for &r in &node.rows {
            let v = col[r as usize];
            in_left[r as usize] = if v.is_nan() { split.missing_goes_left } else { v <= split.threshold };
        }
        let (l_rows, r_rows): (Vec<u32>, Vec<u32>) =
            node.rows.iter().partition(|&&r| in_left[r as usize]);
        let mut l_sorted = Vec::with_capacity(node.sorted.len());
        let mut r_sorted = Vec::with_capacity(node.sorted.len());
        for list in node.sorted {
            let (l, r): (Vec<u32>, Vec<u32>) = list.into_iter().partition(|&r| in_left[r as usize]);
            l_sorted.push(l);
            r_sorted.push(r);
        }
        let depth = node.depth + 1;
        (
            self.open_node(next_slot, depth, l_rows, l_sorted),
            self.open_node(next_slot + 1, depth, r_rows, r_sorted),
        )
    }
}

/// Midpoint of two adjacent distinct values that still separates them.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo / 2.0 + hi / 2.0;
    if mid >= lo && mid < hi {
        mid
    } else {
        lo
    }
}

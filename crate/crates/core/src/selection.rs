//! Server-side greedy selection: budgeted balanced client selection and
//! minimal class-cover encoder selection.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gbdt::{fit, Forest, GbdtError, HyperParams};
use crate::tabular::Dataset;

#[derive(Debug, Error, PartialEq)]
pub enum SelectionError {
    #[error("no client fits within the training budget {budget}")]
    NoFeasibleClient { budget: u64 },
    #[error("no client summaries supplied")]
    NoClients,
    #[error("duplicate client id {0}")]
    DuplicateClient(usize),
    #[error("clients report class histograms of different lengths")]
    RaggedCounts,
    #[error("classes {0:?} are covered by no encoder")]
    UncoverableClasses(BTreeSet<usize>),
    #[error("must-include encoder {0} is not among the candidates")]
    UnknownEncoder(usize),
}

/// What a client discloses for data selection: its label histogram.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientSummary {
    pub client_id: usize,
    pub class_counts: Vec<u64>,
    pub total: u64,
}

impl ClientSummary {
    pub fn new(client_id: usize, class_counts: Vec<u64>) -> Self {
        let total = class_counts.iter().sum();
        Self { client_id, class_counts, total }
    }
}

/// A client's uploaded encoder and the classes it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderRecord {
    pub client_id: usize,
    /// Global class ids, ascending; position `k` is the encoder's local class `k`.
    pub covered_classes: BTreeSet<usize>,
    /// Total leaves across all trees.
    pub param_count: usize,
    pub forest: Forest,
}

impl EncoderRecord {
    /// Trains an encoder on `data`, restricted to the classes present in
    /// its labels.
    pub fn train(client_id: usize, data: &Dataset, hyper: &HyperParams) -> Result<Self, GbdtError> {
        let covered: BTreeSet<usize> = data.labels().iter().copied().collect();
        let local_of: Vec<Option<usize>> = {
            let mut map = vec![None; data.n_classes()];
            for (k, &c) in covered.iter().enumerate() {
                map[c] = Some(k);
            }
            map
        };
        let local_labels = data.labels().iter().map(|&l| local_of[l].expect("covered")).collect();
        let local_names = covered.iter().map(|&c| data.class_names()[c].clone()).collect();
        let local = Dataset::from_cells(
            data.feature_names().to_vec(),
            data.cells().to_vec(),
            local_labels,
            local_names,
        )
        .expect("remapped labels are dense");
        let forest = fit(&local, hyper)?;
        Ok(Self { client_id, covered_classes: covered, param_count: forest.n_leaves(), forest })
    }

    /// Number of covered classes, `h_i`.
    pub fn n_covered(&self) -> usize {
        self.covered_classes.len()
    }
}

/// Population variance of a count vector, `sum (N_c - mean)^2 / C`.
pub fn counts_variance(counts: &[u64]) -> f64 {
    if counts.is_empty() {
        return 0.0;
    }
    scaled_variance(counts) as f64 / (counts.len() as f64).powi(2)
}

/// `C^2 * Var = C * sum N^2 - (sum N)^2`, exact in integers so greedy
/// comparisons never tie by rounding.
fn scaled_variance(counts: &[u64]) -> u128 {
    let c = counts.len() as u128;
    let sum: u128 = counts.iter().map(|&n| n as u128).sum();
    let sum_sq: u128 = counts.iter().map(|&n| (n as u128) * (n as u128)).sum();
    c * sum_sq - sum * sum
}

/// Greedy balanced selection under a sample budget.
///
/// Starts from the most balanced client that fits the budget, then keeps
/// adding the client that minimises the variance of the cumulative
/// histogram while the cumulative total stays within `budget`. Ties go to
/// the lowest client id. Returns ids in selection order.
pub fn select_clients(summaries: &[ClientSummary], budget: u64) -> Result<Vec<usize>, SelectionError> {
    if summaries.is_empty() {
        return Err(SelectionError::NoClients);
    }
    let width = summaries[0].class_counts.len();
    if summaries.iter().any(|s| s.class_counts.len() != width) {
        return Err(SelectionError::RaggedCounts);
    }
    let mut remaining: Vec<&ClientSummary> = summaries.iter().collect();
    remaining.sort_by_key(|s| s.client_id);
    if let Some(w) = remaining.windows(2).find(|w| w[0].client_id == w[1].client_id) {
        return Err(SelectionError::DuplicateClient(w[0].client_id));
    }

    let seed = remaining
        .iter()
        .enumerate()
        .filter(|(_, s)| s.total <= budget)
        .min_by_key(|(_, s)| scaled_variance(&s.class_counts))
        .map(|(k, _)| k)
        .ok_or(SelectionError::NoFeasibleClient { budget })?;
    let first = remaining.remove(seed);
    let mut cumulative = first.class_counts.clone();
    let mut total = first.total;
    let mut selected = vec![first.client_id];

    while !remaining.is_empty() {
        let mut best: Option<(usize, u128)> = None;
        for (k, s) in remaining.iter().enumerate() {
            if total + s.total > budget {
                continue;
            }
            let merged: Vec<u64> = cumulative.iter().zip(&s.class_counts).map(|(a, b)| a + b).collect();
            let v = scaled_variance(&merged);
            if best.is_none_or(|(_, bv)| v < bv) {
                best = Some((k, v));
            }
        }
        let Some((k, _)) = best else { break };
        let s = remaining.remove(k);
        for (a, b) in cumulative.iter_mut().zip(&s.class_counts) {
            *a += b;
        }
        total += s.total;
        selected.push(s.client_id);
    }
    Ok(selected)
}

/// The coverage view of one candidate encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverCandidate {
    pub id: usize,
    pub classes: BTreeSet<usize>,
}

/// Greedy minimal class cover followed by a redundancy-pruning pass.
///
/// Each step takes the candidate covering the most still-uncovered
/// classes (ties: more classes overall, then lower id). `must_include`
/// ids are appended after the greedy phase and are never pruned. The
/// pruning pass then drops, in selection order, any other member whose
/// removal keeps `all_classes` covered. Returns ids in selection order.
pub fn select_cover(
    candidates: &[CoverCandidate],
    all_classes: &BTreeSet<usize>,
    must_include: &[usize],
) -> Result<Vec<usize>, SelectionError> {
    let reachable: BTreeSet<usize> = candidates.iter().flat_map(|c| c.classes.iter().copied()).collect();
    let missing: BTreeSet<usize> = all_classes.difference(&reachable).copied().collect();
    if !missing.is_empty() {
        return Err(SelectionError::UncoverableClasses(missing));
    }
    if let Some(&id) = must_include.iter().find(|id| !candidates.iter().any(|c| c.id == **id)) {
        return Err(SelectionError::UnknownEncoder(id));
    }

    let mut order: Vec<&CoverCandidate> = candidates.iter().collect();
    order.sort_by_key(|c| c.id);
    let mut uncovered = all_classes.clone();
    let mut selected: Vec<&CoverCandidate> = Vec::new();
    while !uncovered.is_empty() {
        let best = order
            .iter()
            .filter(|c| !selected.iter().any(|s| s.id == c.id))
            .map(|c| (c.classes.intersection(&uncovered).count(), c.classes.len(), *c))
            .filter(|(overlap, _, _)| *overlap > 0)
            // max_by_key keeps the last maximum; reverse so the lowest id wins.
            .rev()
            .max_by_key(|(overlap, size, _)| (*overlap, *size))
            .map(|(_, _, c)| c)
            .ok_or_else(|| SelectionError::UncoverableClasses(uncovered.clone()))?;
        for c in &best.classes {
            uncovered.remove(c);
        }
        selected.push(best);
    }
    for id in must_include {
        if !selected.iter().any(|s| s.id == *id) {
            selected.push(order.iter().find(|c| c.id == *id).expect("checked above"));
        }
    }

    let mut k = 0;
    while k < selected.len() {
        if must_include.contains(&selected[k].id) {
            k += 1;
            continue;
        }
        let without: BTreeSet<usize> = selected
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .flat_map(|(_, c)| c.classes.iter().copied())
            .collect();
        if all_classes.is_subset(&without) {
            selected.remove(k);
        } else {
            k += 1;
        }
    }
    Ok(selected.into_iter().map(|c| c.id).collect())
}

/// [`select_cover`] over encoder records, returning the chosen records.
pub fn select_encoders(
    records: &[EncoderRecord],
    all_classes: &BTreeSet<usize>,
    must_include: &[usize],
) -> Result<Vec<EncoderRecord>, SelectionError> {
    let candidates: Vec<CoverCandidate> = records
        .iter()
        .map(|r| CoverCandidate { id: r.client_id, classes: r.covered_classes.clone() })
        .collect();
    let ids = select_cover(&candidates, all_classes, must_include)?;
    Ok(ids
        .into_iter()
        .map(|id| records.iter().find(|r| r.client_id == id).expect("selected from records").clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    fn cands(covers: &[&[usize]]) -> Vec<CoverCandidate> {
        covers
            .iter()
            .enumerate()
            .map(|(i, c)| CoverCandidate { id: i + 1, classes: set(c) })
            .collect()
    }

    #[test]
    fn variance_values() {
        assert_eq!(counts_variance(&[5, 5, 5]), 0.0);
        assert!((counts_variance(&[2, 4, 6]) - 8.0 / 3.0).abs() < 1e-12);
        assert_eq!(counts_variance(&[9]), 0.0);
    }

    #[test]
    fn budgeted_selection_example() {
        let s = vec![
            ClientSummary::new(0, vec![10, 0]),
            ClientSummary::new(1, vec![0, 10]),
            ClientSummary::new(2, vec![5, 5]),
            ClientSummary::new(3, vec![8, 8]),
        ];
        assert_eq!(select_clients(&s, 26).unwrap(), vec![2, 3]);
    }

    #[test]
    fn single_feasible_client() {
        let s = vec![ClientSummary::new(4, vec![3, 1])];
        assert_eq!(select_clients(&s, 10).unwrap(), vec![4]);
        assert_eq!(select_clients(&s, 3), Err(SelectionError::NoFeasibleClient { budget: 3 }));
    }

    #[test]
    fn balanced_clients_all_selected_in_id_order() {
        let s: Vec<_> = [3, 0, 2, 1].iter().map(|&i| ClientSummary::new(i, vec![4, 4, 4])).collect();
        assert_eq!(select_clients(&s, 1000).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn cover_example_five_classes() {
        let c = cands(&[&[1, 2], &[2, 3, 4], &[3, 4, 5]]);
        let chosen = select_cover(&c, &set(&[1, 2, 3, 4, 5]), &[]).unwrap();
        assert_eq!(set(&chosen), set(&[1, 3]));
    }

    #[test]
    fn cover_keeps_irredundant_pair() {
        let c = cands(&[&[1, 2, 3], &[3, 4], &[1, 4]]);
        assert_eq!(select_cover(&c, &set(&[1, 2, 3, 4]), &[]).unwrap(), vec![1, 2]);
    }

    #[test]
    fn single_full_cover() {
        let c = cands(&[&[1, 2, 3]]);
        assert_eq!(select_cover(&c, &set(&[1, 2, 3]), &[]).unwrap(), vec![1]);
    }

    #[test]
    fn uncoverable_reports_missing() {
        let c = cands(&[&[1, 2]]);
        assert_eq!(
            select_cover(&c, &set(&[1, 2, 5]), &[]),
            Err(SelectionError::UncoverableClasses(set(&[5])))
        );
    }

    #[test]
    fn must_include_survives_pruning() {
        let c = cands(&[&[1, 2], &[1]]);
        assert_eq!(select_cover(&c, &set(&[1, 2]), &[2]).unwrap(), vec![1, 2]);
        assert_eq!(select_cover(&c, &set(&[1, 2]), &[9]), Err(SelectionError::UnknownEncoder(9)));
    }
}

mod common;

use fedforest::gbdt::{extract_rules, fit, fit_traced, HyperParams, TreeNode};
use proptest::prelude::*;

fn hyper() -> impl Strategy<Value = HyperParams> {
    (1usize..8, 1usize..5, 0.05f64..0.5, 0.5f64..3.0, 1usize..4).prop_map(|(t, depth, lr, lambda, msl)| {
        let mut h = HyperParams::with_depth(t, depth);
        h.learning_rate = lr;
        h.lambda = lambda;
        h.min_samples_leaf = msl;
        h
    })
}

fn depth_of(node: &TreeNode) -> usize {
    match node {
        TreeNode::Leaf { .. } => 0,
        TreeNode::Split { left, right, .. } => 1 + depth_of(left).max(depth_of(right)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn logits_are_base_plus_tree_outputs(d in common::dataset(60, 3, 3), h in hyper()) {
        let f = fit(&d, &h).unwrap();
        for row in d.rows() {
            let logits = f.logits(row).unwrap();
            for (c, trees) in f.trees().iter().enumerate() {
                let mut expected = f.base_score();
                for t in trees {
                    expected += t.evaluate(row);
                }
                prop_assert_eq!(logits[c], expected);
            }
        }
    }

    #[test]
    fn trees_respect_leaf_and_depth_caps(d in common::dataset(80, 4, 4), h in hyper()) {
        let f = fit(&d, &h).unwrap();
        for t in f.trees().iter().flatten() {
            prop_assert!(t.n_leaves() <= h.num_leaves);
            prop_assert!(depth_of(t) <= h.max_depth);
            prop_assert_eq!(t.depth(), depth_of(t));
        }
    }

    #[test]
    fn training_loss_never_increases(d in common::dataset(80, 3, 4), h in hyper()) {
        let (_, losses) = fit_traced(&d, &h).unwrap();
        prop_assert_eq!(losses.len(), h.n_estimators + 1);
        for w in losses.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", losses);
        }
    }

    #[test]
    fn refits_serialise_identically(d in common::dataset(60, 3, 3), h in hyper()) {
        prop_assert_eq!(fit(&d, &h).unwrap().to_json(), fit(&d, &h).unwrap().to_json());
    }

    #[test]
    fn every_row_matches_exactly_one_rule_per_tree(d in common::dataset(50, 3, 3), h in hyper()) {
        let f = fit(&d, &h).unwrap();
        let rules = extract_rules(&f);
        let all_missing = vec![None; d.n_features()];
        for row in d.rows().chain(std::iter::once(all_missing.as_slice())) {
            for (c, trees) in f.trees().iter().enumerate() {
                for (t, tree) in trees.iter().enumerate() {
                    let hits: Vec<_> = rules.iter().filter(|r| r.class == c && r.tree == t && r.holds(row)).collect();
                    prop_assert_eq!(hits.len(), 1);
                    prop_assert_eq!(hits[0].value, tree.evaluate(row));
                }
            }
            let p = f.predict(row).unwrap();
            prop_assert!((p.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn json_round_trip_preserves_predictions(d in common::dataset(40, 3, 3), h in hyper()) {
        let f = fit(&d, &h).unwrap();
        let back = fedforest::gbdt::Forest::from_json(&f.to_json()).unwrap();
        prop_assert_eq!(&back, &f);
    }
}

#![allow(dead_code)]

use fedforest::tabular::Dataset;
use proptest::prelude::*;

/// Small datasets with quarter-step values and roughly 10% missing cells.
pub fn dataset(max_rows: usize, max_features: usize, max_classes: usize) -> impl Strategy<Value = Dataset> {
    (2..=max_rows, 1..=max_features, 1..=max_classes).prop_flat_map(|(n, m, c)| {
        let cell = prop_oneof![1 => Just(None), 9 => (-40i32..40).prop_map(|v| Some(v as f64 / 4.0))];
        (prop::collection::vec(cell, n * m), prop::collection::vec(0..c, n)).prop_map(move |(cells, labels)| {
            let features = (0..m).map(|j| format!("f{j}")).collect();
            let classes = (0..c).map(|k| format!("c{k}")).collect();
            Dataset::from_cells(features, cells, labels, classes).unwrap()
        })
    })
}

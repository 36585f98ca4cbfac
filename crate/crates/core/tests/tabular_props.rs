mod common;

use fedforest::tabular::{
    partition_clients, preprocess, read_csv, write_csv, Dataset, PartitionMode, PreprocessMode,
};
use proptest::prelude::*;

fn arbitrary_float() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        1 => Just(None),
        4 => (prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO).prop_map(Some),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_bit_exact(
        (m, cells, labels) in (1usize..5, 1usize..20).prop_flat_map(|(m, n)| (
            Just(m),
            prop::collection::vec(arbitrary_float(), n * m),
            prop::collection::vec(0usize..3, n),
        )),
    ) {
        let features = (0..m).map(|j| format!("col{j}")).collect();
        let classes = vec!["x".to_string(), "y".to_string(), "z".to_string()];
        let d = Dataset::from_cells(features, cells, labels, classes.clone()).unwrap();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf, "label").unwrap();
        let back = read_csv(buf.as_slice(), "label", Some(&classes)).unwrap();
        prop_assert_eq!(back.labels(), d.labels());
        prop_assert_eq!(back.feature_names(), d.feature_names());
        for (a, b) in back.cells().iter().zip(d.cells()) {
            prop_assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
        }
    }

    #[test]
    fn partitions_are_complete_and_disjoint(
        d in common::dataset(80, 3, 4),
        n_clients in 1usize..5,
        heterogeneous in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let mode = if heterogeneous {
            PartitionMode::Heterogeneous { benign_class: "c0".into() }
        } else {
            PartitionMode::Homogeneous
        };
        let Ok(parts) = partition_clients(&d, n_clients, &mode, seed) else { return Ok(()) };
        prop_assert_eq!(parts.len(), n_clients);
        let mut seen = vec![0u8; d.n_samples()];
        for p in &parts {
            prop_assert_eq!(p.dataset().class_counts(), p.class_counts().to_vec());
            for (k, &src) in p.source_rows().iter().enumerate() {
                seen[src] += 1;
                prop_assert_eq!(p.dataset().row(k), d.row(src));
                prop_assert_eq!(p.dataset().labels()[k], d.labels()[src]);
            }
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn refitting_preprocess_statistics_is_idempotent(
        d in common::dataset(40, 4, 2),
        standardize in any::<bool>(),
    ) {
        let mode = if standardize { PreprocessMode::Standardize } else { PreprocessMode::Log };
        let (first, stats) = preprocess(&d, mode, None).unwrap();
        let (second, _) = preprocess(&d, mode, Some(&stats)).unwrap();
        prop_assert_eq!(first, second);
    }
}

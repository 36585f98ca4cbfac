use fedforest::privacy::{laplace_noise, mask_features, mask_labels, MaskingParams};
use fedforest::seed::seeded_rng;
use fedforest::tabular::Dataset;
use proptest::prelude::*;

fn dense(n: usize, m: usize, n_classes: usize) -> Dataset {
    let rows = (0..n).map(|i| (0..m).map(|j| (i * m + j) as f64).collect()).collect();
    let labels = (0..n).map(|i| i % n_classes).collect();
    let names = (0..n_classes).map(|c| format!("c{c}")).collect();
    Dataset::from_dense(rows, labels, names).unwrap()
}

#[test]
fn mask_count_within_binomial_interval() {
    // Central 99.9% interval of Binomial(10000, 0.1): mean 1000, sd 30, z 3.29.
    let d = dense(100, 100, 2);
    for seed in 0..5 {
        let masked = mask_features(&d, &MaskingParams { p: 0.1, q: 0.0, seed }).unwrap();
        let k = masked.missing_count();
        assert!((902..=1098).contains(&k), "seed {seed}: {k}");
    }
}

#[test]
fn mean_mask_density_over_seeds() {
    let d = dense(50, 20, 2);
    let p = 0.25;
    let cells = (d.n_samples() * d.n_features()) as f64;
    let mean: f64 = (0..30)
        .map(|seed| mask_features(&d, &MaskingParams { p, q: 0.0, seed }).unwrap().missing_count() as f64 / cells)
        .sum::<f64>()
        / 30.0;
    let sigma = (p * (1.0 - p) / (cells * 30.0)).sqrt();
    assert!((mean - p).abs() <= 3.0 * sigma, "mean {mean}");
}

#[test]
fn laplace_moments() {
    let mut rng = seeded_rng(3);
    let mut draws: Vec<f64> = (0..100_000).map(|_| laplace_noise(&mut rng, 1.0)).collect();
    let mean_abs = draws.iter().map(|x| x.abs()).sum::<f64>() / draws.len() as f64;
    assert!((mean_abs - 1.0).abs() < 0.05, "E|X| = {mean_abs}");
    draws.sort_by(f64::total_cmp);
    let median = draws[draws.len() / 2];
    assert!(median.abs() <= 0.05, "median {median}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn masking_preserves_shape_and_labels(n in 1usize..40, m in 1usize..6, p in 0.0f64..=1.0, seed in any::<u64>()) {
        let d = dense(n, m, 3);
        let masked = mask_features(&d, &MaskingParams { p, q: 0.0, seed }).unwrap();
        prop_assert_eq!(masked.n_samples(), n);
        prop_assert_eq!(masked.n_features(), m);
        prop_assert_eq!(masked.labels(), d.labels());
        for (a, b) in masked.cells().iter().zip(d.cells()) {
            prop_assert!(a.is_none() || a == b);
        }
        let again = mask_features(&masked, &MaskingParams { p, q: 0.0, seed: seed ^ 1 }).unwrap();
        prop_assert!(again.missing_count() >= masked.missing_count());
    }

    #[test]
    fn label_noise_flips_exact_count(n in 1usize..80, n_classes in 2usize..5, q in 0.0f64..=1.0, seed in any::<u64>()) {
        let d = dense(n, 2, n_classes);
        let noisy = mask_labels(&d, &MaskingParams { p: 0.0, q, seed }).unwrap();
        prop_assert_eq!(noisy.cells(), d.cells());
        let changed = noisy.labels().iter().zip(d.labels()).filter(|(a, b)| a != b).count();
        prop_assert_eq!(changed, (q * n as f64 + 1e-9).floor() as usize);
        prop_assert!(noisy.labels().iter().all(|&l| l < n_classes));
    }
}

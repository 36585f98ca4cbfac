//! Gaussian class-cluster generator for self-contained experiments.
//!
//! Class 0 is `benign` and sits at the origin. Attack class `c` is centred
//! at `separation * (1 + (c-1) / m) * e_{(c-1) mod m}`, so the first `m`
//! attacks lie on distinct axes and later ones are pushed further out on
//! reused axes. Every cluster is isotropic with standard deviation `spread`.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::seed::seeded_rng;
use crate::tabular::{Dataset, TabularError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    /// Distance scale between cluster centres.
    #[serde(default = "default_separation")]
    pub separation: f64,
    /// Per-coordinate standard deviation; larger means more overlap.
    #[serde(default = "default_spread")]
    pub spread: f64,
    /// Share of samples in the benign class; attacks split the rest evenly.
    #[serde(default = "default_benign_fraction")]
    pub benign_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_separation() -> f64 {
    3.0
}

fn default_spread() -> f64 {
    1.0
}

fn default_benign_fraction() -> f64 {
    0.4
}

impl SyntheticSpec {
    pub fn new(n_samples: usize, n_features: usize, n_classes: usize, seed: u64) -> Self {
        Self {
            n_samples,
            n_features,
            n_classes,
            separation: default_separation(),
            spread: default_spread(),
            benign_fraction: default_benign_fraction(),
            seed,
        }
    }

    /// Samples per class; rounding leftovers go to the benign class.
    pub fn class_sizes(&self) -> Vec<usize> {
        if self.n_classes == 1 {
            return vec![self.n_samples];
        }
        let attacks = self.n_classes - 1;
        let per_attack = ((1.0 - self.benign_fraction) * self.n_samples as f64 / attacks as f64).floor() as usize;
        let mut sizes = vec![per_attack; self.n_classes];
        sizes[0] = self.n_samples - per_attack * attacks;
        sizes
    }

    pub fn class_center(&self, class: usize) -> Vec<f64> {
        let mut center = vec![0.0; self.n_features];
        if class > 0 {
            let k = class - 1;
            center[k % self.n_features] = self.separation * (1 + k / self.n_features) as f64;
        }
        center
    }

    pub fn class_names(&self) -> Vec<String> {
        (0..self.n_classes).map(|c| if c == 0 { "benign".into() } else { format!("attack_{c}") }).collect()
    }
}

/// Draws a shuffled dataset following `spec`.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset, TabularError> {
    let valid = spec.n_samples > 0
        && spec.n_features > 0
        && spec.n_classes > 0
        && spec.separation.is_finite()
        && spec.spread.is_finite()
        && spec.spread > 0.0
        && (0.0..=1.0).contains(&spec.benign_fraction);
    if !valid {
        return Err(TabularError::InvalidArgument(format!("synthetic spec {spec:?}")));
    }
    let mut rng = seeded_rng(spec.seed);
    let noise = Normal::new(0.0, spec.spread).expect("spread checked");
    let mut samples: Vec<(Vec<f64>, usize)> = Vec::with_capacity(spec.n_samples);
    for (class, &size) in spec.class_sizes().iter().enumerate() {
        let center = spec.class_center(class);
        for _ in 0..size {
            let row = center.iter().map(|&mu| mu + noise.sample(&mut rng)).collect();
            samples.push((row, class));
        }
    }
    samples.shuffle(&mut rng);
    let (rows, labels) = samples.into_iter().unzip();
    Dataset::from_dense(rows, labels, spec.class_names())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_names() {
        let spec = SyntheticSpec::new(1000, 4, 4, 1);
        assert_eq!(spec.class_sizes(), vec![400, 200, 200, 200]);
        let d = generate(&spec).unwrap();
        assert_eq!(d.class_counts(), vec![400, 200, 200, 200]);
        assert_eq!(d.class_names()[2], "attack_2");
        assert_eq!(d.n_features(), 4);
    }

    #[test]
    fn reproducible() {
        let spec = SyntheticSpec::new(50, 3, 5, 9);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        assert_eq!(spec.class_center(4), vec![6.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_spec() {
        let mut spec = SyntheticSpec::new(10, 2, 2, 0);
        spec.spread = 0.0;
        assert!(generate(&spec).is_err());
    }
}

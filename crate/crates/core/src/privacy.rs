//! Client-side privacy mechanisms: random feature masking, label noise and
//! Laplace noise on released encodings.

use rand::distr::Open01;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::federation::EncodingMatrix;
use crate::seed::seeded_rng;
use crate::tabular::Dataset;

/// L1 sensitivity of a softmax vector: two probability vectors differ by
/// at most 2 in L1 norm.
pub const ENCODING_SENSITIVITY: f64 = 2.0;

#[derive(Debug, Error, PartialEq)]
pub enum PrivacyError {
    #[error("mask probability p must lie in [0, 1], got {0}")]
    InvalidMaskProbability(f64),
    #[error("label noise fraction q must lie in [0, 1), got {0}")]
    InvalidLabelNoise(f64),
    #[error("label noise needs at least two classes")]
    SingleClassNoise,
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
}

/// Feature-mask probability `p`, label-noise fraction `q` and the seed
/// driving both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskingParams {
    pub p: f64,
    pub q: f64,
    pub seed: u64,
}

impl MaskingParams {
    pub fn validate(&self) -> Result<(), PrivacyError> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(PrivacyError::InvalidMaskProbability(self.p));
        }
        if !(0.0..1.0).contains(&self.q) {
            return Err(PrivacyError::InvalidLabelNoise(self.q));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpParams {
    pub epsilon: f64,
    pub sensitivity: f64,
}

impl DpParams {
    /// Parameters for softmax encodings (sensitivity 2).
    pub fn for_encodings(epsilon: f64) -> Self {
        Self { epsilon, sensitivity: ENCODING_SENSITIVITY }
    }

    /// Laplace scale `sensitivity / epsilon`.
    pub fn scale(&self) -> f64 {
        self.sensitivity / self.epsilon
    }
}

/// Sets each cell missing independently with probability `p`. One uniform
/// is drawn per cell in row-major order, including cells already missing.
pub fn mask_features(d: &Dataset, params: &MaskingParams) -> Result<Dataset, PrivacyError> {
    params.validate()?;
    let mut rng = seeded_rng(params.seed);
    let cells = d
        .cells()
        .iter()
        .map(|&c| if rng.random::<f64>() < params.p { None } else { c })
        .collect();
    Ok(d.with_cells(cells).expect("same shape"))
}

/// Replaces exactly `floor(q * n)` uniformly chosen labels with a
/// different label drawn uniformly from the remaining classes.
pub fn mask_labels(d: &Dataset, params: &MaskingParams) -> Result<Dataset, PrivacyError> {
    params.validate()?;
    let n = d.n_samples();
    // Small slack so decimal fractions like 0.29 * 100 land on 29.
    let k = ((params.q * n as f64) + 1e-9).floor() as usize;
    let k = k.min(n);
    if k == 0 {
        return Ok(d.clone());
    }
    let n_classes = d.n_classes();
    if n_classes < 2 {
        return Err(PrivacyError::SingleClassNoise);
    }
    let mut rng = seeded_rng(params.seed);
    let mut chosen = index::sample(&mut rng, n, k).into_vec();
    chosen.sort_unstable();
    let mut labels = d.labels().to_vec();
    for i in chosen {
        let draw = rng.random_range(0..n_classes - 1);
        labels[i] = if draw >= labels[i] { draw + 1 } else { draw };
    }
    Ok(d.with_labels(labels).expect("labels stay in range"))
}

/// One Laplace(0, scale) draw by inverse CDF from an open-interval uniform.
pub fn laplace_noise<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    let u: f64 = rng.sample(Open01);
    if u < 0.5 {
        scale * (2.0 * u).ln()
    } else {
        -scale * (2.0 * (1.0 - u)).ln()
    }
}

/// Adds independent Laplace(0, sensitivity/epsilon) noise to every
/// encoding cell. Labels and column map are untouched. An infinite
/// epsilon adds exact zeros.
pub fn add_laplace(enc: &EncodingMatrix, dp: &DpParams, seed: u64) -> Result<EncodingMatrix, PrivacyError> {
    if dp.epsilon.is_nan() || dp.epsilon <= 0.0 {
        return Err(PrivacyError::NonPositiveEpsilon(dp.epsilon));
    }
    let scale = dp.scale();
    let mut rng = seeded_rng(seed);
    let mut out = enc.clone();
    for v in out.values_mut() {
        *v += laplace_noise(&mut rng, scale);
    }
    Ok(out)
}

/// `log10` of the number of leaf-score combinations an attacker faces,
/// `n_leaves^(classes * trees)`.
pub fn logit_search_space(n_leaves: u64, n_classes: u64, n_trees: u64) -> f64 {
    (n_classes * n_trees) as f64 * (n_leaves as f64).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, m: usize, n_classes: usize) -> Dataset {
        let rows = (0..n).map(|i| (0..m).map(|j| (i * m + j) as f64).collect()).collect();
        let labels = (0..n).map(|i| i % n_classes).collect();
        let names = (0..n_classes).map(|c| format!("c{c}")).collect();
        Dataset::from_dense(rows, labels, names).unwrap()
    }

    fn masking(p: f64, q: f64) -> MaskingParams {
        MaskingParams { p, q, seed: 11 }
    }

    #[test]
    fn mask_extremes() {
        let d = grid(20, 5, 2);
        assert_eq!(mask_features(&d, &masking(0.0, 0.0)).unwrap(), d);
        let all = mask_features(&d, &masking(1.0, 0.0)).unwrap();
        assert_eq!(all.missing_count(), 100);
        assert_eq!(all.labels(), d.labels());
    }

    #[test]
    fn label_noise_changes_exact_count() {
        let d = grid(100, 1, 4);
        let noisy = mask_labels(&d, &masking(0.0, 0.2)).unwrap();
        let changed = d.labels().iter().zip(noisy.labels()).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 20);
        assert_eq!(noisy.cells(), d.cells());
    }

    #[test]
    fn binary_label_noise_flips() {
        let d = grid(10, 1, 2);
        let noisy = mask_labels(&d, &masking(0.0, 0.5)).unwrap();
        let flips = d.labels().iter().zip(noisy.labels()).filter(|(a, b)| **b == 1 - **a).count();
        assert_eq!(flips, 5);
    }

    #[test]
    fn zero_label_noise_is_identity() {
        let d = grid(10, 1, 3);
        assert_eq!(mask_labels(&d, &masking(0.0, 0.0)).unwrap(), d);
    }

    #[test]
    fn single_class_noise_rejected() {
        let d = grid(10, 1, 1);
        assert_eq!(mask_labels(&d, &masking(0.0, 0.3)), Err(PrivacyError::SingleClassNoise));
    }

    #[test]
    fn invalid_params() {
        let d = grid(4, 1, 2);
        assert!(mask_features(&d, &masking(1.5, 0.0)).is_err());
        assert!(mask_labels(&d, &masking(0.0, 1.0)).is_err());
    }

    #[test]
    fn search_space_values() {
        assert_eq!(logit_search_space(10, 2, 60), 120.0);
        assert_eq!(logit_search_space(1, 5, 7), 0.0);
        assert!((logit_search_space(2, 3, 4) - 3.612_359_947_967_774).abs() < 1e-12);
    }

    #[test]
    fn laplace_noise_is_symmetric_about_zero() {
        let mut rng = seeded_rng(5);
        let mut draws: Vec<f64> = (0..100_000).map(|_| laplace_noise(&mut rng, 1.0)).collect();
        draws.sort_by(f64::total_cmp);
        let median = (draws[49_999] + draws[50_000]) / 2.0;
        assert!(median.abs() < 0.05);
    }
}

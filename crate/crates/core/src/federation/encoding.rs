use serde::{Deserialize, Serialize};

use super::FederationError;
use crate::selection::EncoderRecord;
use crate::tabular::Dataset;

/// Which encoder output a column carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSource {
    /// Client id of the encoder.
    pub encoder: usize,
    /// Class position inside that encoder.
    pub local_class: usize,
    /// The same class in the global dictionary.
    pub class_id: usize,
}

/// Concatenated trimmed softmax blocks, one row per sample.
///
/// Each encoder with `h` covered classes contributes its first `h - 1`
/// probabilities; the last is implied by the others summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingMatrix {
    values: Vec<f64>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    column_map: Vec<ColumnSource>,
}

impl EncodingMatrix {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn width(&self) -> usize {
        self.column_map.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn column_map(&self) -> &[ColumnSource] {
        &self.column_map
    }

    /// The encoding as a fully observed dataset for the server classifier.
    pub fn to_dataset(&self) -> Dataset {
        let names = self
            .column_map
            .iter()
            .map(|c| format!("enc{}_{}", c.encoder, self.class_names[c.class_id]))
            .collect();
        Dataset::from_cells(
            names,
            self.values.iter().map(|&v| Some(v)).collect(),
            self.labels.clone(),
            self.class_names.clone(),
        )
        .expect("encodings are finite and labels in range")
    }

    /// Row-wise concatenation of matrices sharing one column map.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a EncodingMatrix>) -> Result<Self, FederationError> {
        let mut iter = parts.into_iter();
        let first = iter.next().ok_or(FederationError::EmptyEncoding)?;
        let mut out = first.clone();
        for part in iter {
            if part.column_map != out.column_map || part.class_names != out.class_names {
                return Err(FederationError::ColumnMapMismatch);
            }
            out.values.extend_from_slice(&part.values);
            out.labels.extend_from_slice(&part.labels);
        }
        Ok(out)
    }
}

/// Column map for an ordered encoder list; its length is `sum (h_i - 1)`.
pub fn column_map(encoders: &[EncoderRecord]) -> Vec<ColumnSource> {
    encoders
        .iter()
        .flat_map(|e| {
            let kept = e.n_covered().saturating_sub(1);
            e.covered_classes.iter().take(kept).enumerate().map(move |(local_class, &class_id)| {
                ColumnSource { encoder: e.client_id, local_class, class_id }
            })
        })
        .collect()
}

/// Encodes `d` with the encoders in the given order. Labels are copied
/// through; no noise is added here.
pub fn encode_with(encoders: &[EncoderRecord], d: &Dataset) -> Result<EncodingMatrix, FederationError> {
    if let Some(e) = encoders.iter().find(|e| e.forest.n_features() != d.n_features()) {
        return Err(FederationError::FeatureDimMismatch {
            encoder: e.client_id,
            expected: e.forest.n_features(),
            found: d.n_features(),
        });
    }
    let column_map = column_map(encoders);
    let mut values = Vec::with_capacity(d.n_samples() * column_map.len());
    for row in d.rows() {
        for e in encoders {
            let probs = e.forest.predict(row)?.probs;
            let kept = probs.len().saturating_sub(1);
            values.extend_from_slice(&probs[..kept]);
        }
    }
    Ok(EncodingMatrix {
        values,
        labels: d.labels().to_vec(),
        class_names: d.class_names().to_vec(),
        column_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbdt::HyperParams;

    fn data(labels: Vec<usize>, n_classes: usize) -> Dataset {
        let rows = labels.iter().enumerate().map(|(i, &l)| vec![l as f64 + 0.01 * i as f64]).collect();
        let names = (0..n_classes).map(|c| format!("c{c}")).collect();
        Dataset::from_dense(rows, labels, names).unwrap()
    }

    #[test]
    fn width_is_sum_of_trimmed_blocks() {
        let hyper = HyperParams::with_depth(3, 2);
        let a = EncoderRecord::train(0, &data(vec![0, 1, 2, 0, 1, 2], 4), &hyper).unwrap();
        let b = EncoderRecord::train(1, &data(vec![1, 3, 1, 3], 4), &hyper).unwrap();
        assert_eq!((a.n_covered(), b.n_covered()), (3, 2));
        let enc = encode_with(&[a, b], &data(vec![0, 1, 2, 3], 4)).unwrap();
        assert_eq!(enc.width(), 3);
        assert_eq!(enc.column_map()[2], ColumnSource { encoder: 1, local_class: 0, class_id: 1 });
    }

    #[test]
    fn binary_encoder_keeps_first_probability() {
        let hyper = HyperParams::with_depth(5, 2);
        let d = data(vec![0, 1, 0, 1, 0, 1], 2);
        let e = EncoderRecord::train(7, &d, &hyper).unwrap();
        let enc = encode_with(std::slice::from_ref(&e), &d).unwrap();
        assert_eq!(enc.width(), 1);
        for i in 0..d.n_samples() {
            let p0 = e.forest.predict(d.row(i)).unwrap().probs[0];
            assert_eq!(enc.row(i), &[p0]);
            assert!((0.0..=1.0).contains(&p0));
        }
    }

    #[test]
    fn feature_mismatch() {
        let e = EncoderRecord::train(2, &data(vec![0, 1], 2), &HyperParams::with_depth(1, 1)).unwrap();
        let wide = Dataset::from_dense(vec![vec![0.0, 1.0]], vec![0], vec!["a".into(), "b".into()]).unwrap();
        assert!(matches!(
            encode_with(&[e], &wide),
            Err(FederationError::FeatureDimMismatch { encoder: 2, .. })
        ));
    }
}

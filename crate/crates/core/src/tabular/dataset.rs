use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::TabularError;
use crate::seed::seeded_rng;

/// A feature matrix with per-cell missing flags, integer labels and the
/// class dictionary that names them.
///
/// Cells are stored row-major. `None` marks a missing cell; every present
/// cell is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    feature_names: Vec<String>,
    cells: Vec<Option<f64>>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from row-major cells, validating shape, finiteness
    /// and label range.
    pub fn from_cells(
        feature_names: Vec<String>,
        cells: Vec<Option<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self, TabularError> {
        let m = feature_names.len();
        if cells.len() != m * labels.len() {
            return Err(TabularError::Shape(format!(
                "{} cells for {} rows of {} features",
                cells.len(),
                labels.len(),
                m
            )));
        }
        if m == 0 && !cells.is_empty() {
            return Err(TabularError::Shape("cells without features".into()));
        }
        if let Some(pos) = cells.iter().position(|c| matches!(c, Some(v) if !v.is_finite())) {
            return Err(TabularError::NonFinite { row: pos / m, col: pos % m });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(TabularError::LabelOutOfRange { label, n_classes: class_names.len() });
        }
        Ok(Self { feature_names, cells, labels, class_names })
    }

    pub fn from_rows(
        feature_names: Vec<String>,
        rows: Vec<Vec<Option<f64>>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self, TabularError> {
        let m = feature_names.len();
        if let Some(i) = rows.iter().position(|r| r.len() != m) {
            return Err(TabularError::Shape(format!(
                "row {i} has {} cells, expected {m}",
                rows[i].len()
            )));
        }
        if rows.len() != labels.len() {
            return Err(TabularError::Shape(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        Self::from_cells(feature_names, rows.into_iter().flatten().collect(), labels, class_names)
    }

    /// Convenience constructor for fully observed data with generated
    /// feature names `f0..f{m-1}`.
    pub fn from_dense(
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self, TabularError> {
        let m = rows.first().map_or(0, Vec::len);
        let names = (0..m).map(|j| format!("f{j}")).collect();
        let rows = rows.into_iter().map(|r| r.into_iter().map(Some).collect()).collect();
        Self::from_rows(names, rows, labels, class_names)
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn cells(&self) -> &[Option<f64>] {
        &self.cells
    }

    pub fn row(&self, i: usize) -> &[Option<f64>] {
        let m = self.n_features();
        &self.cells[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Option<f64>]> + '_ {
        (0..self.n_samples()).map(move |i| self.row(i))
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row * self.n_features() + col]
    }

    pub fn class_id(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    /// Per-class sample counts, length `n_classes`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let m = self.n_features();
        let mut cells = Vec::with_capacity(indices.len() * m);
        for &i in indices {
            cells.extend_from_slice(self.row(i));
        }
        Dataset {
            feature_names: self.feature_names.clone(),
            cells,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Same features with a replacement label vector.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Dataset, TabularError> {
        if labels.len() != self.n_samples() {
            return Err(TabularError::Shape(format!(
                "{} labels for {} rows",
                labels.len(),
                self.n_samples()
            )));
        }
        Dataset::from_cells(
            self.feature_names.clone(),
            self.cells.clone(),
            labels,
            self.class_names.clone(),
        )
    }

    /// Same labels with replacement cells (row-major).
    pub fn with_cells(&self, cells: Vec<Option<f64>>) -> Result<Dataset, TabularError> {
        Dataset::from_cells(
            self.feature_names.clone(),
            cells,
            self.labels.clone(),
            self.class_names.clone(),
        )
    }

    /// Row-wise concatenation. Both sides must share features and classes.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset, TabularError> {
        if self.feature_names != other.feature_names || self.class_names != other.class_names {
            return Err(TabularError::Shape("concatenating datasets with different schemas".into()));
        }
        let mut out = self.clone();
        out.cells.extend_from_slice(&other.cells);
        out.labels.extend_from_slice(&other.labels);
        Ok(out)
    }
}

/// Stratified seeded split into `(train, test)`.
///
/// Each class contributes `round(count * test_fraction)` rows to the test
/// side. Row order within each side follows the original order.
pub fn train_test_split(
    d: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), TabularError> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(TabularError::InvalidArgument(format!(
            "test_fraction must lie in [0, 1), got {test_fraction}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); d.n_classes()];
    for (i, &l) in d.labels().iter().enumerate() {
        by_class[l].push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut rows in by_class {
        rows.shuffle(&mut rng);
        let n_test = (rows.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((d.subset(&train), d.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn rejects_infinite_cells() {
        let err = Dataset::from_dense(vec![vec![1.0], vec![f64::INFINITY]], vec![0, 0], names(1));
        assert!(matches!(err, Err(TabularError::NonFinite { row: 1, col: 0 })));
    }

    #[test]
    fn rejects_out_of_range_label() {
        let err = Dataset::from_dense(vec![vec![1.0]], vec![2], names(2));
        assert!(matches!(err, Err(TabularError::LabelOutOfRange { label: 2, .. })));
    }

    #[test]
    fn subset_and_counts() {
        let d = Dataset::from_dense(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![0, 1, 1, 0],
            names(2),
        )
        .unwrap();
        assert_eq!(d.class_counts(), vec![2, 2]);
        let s = d.subset(&[2, 0]);
        assert_eq!(s.labels(), &[1, 0]);
        assert_eq!(s.cell(0, 0), Some(2.0));
    }

    #[test]
    fn split_is_stratified_and_complete() {
        let rows = (0..100).map(|i| vec![i as f64]).collect();
        let labels = (0..100).map(|i| usize::from(i >= 80)).collect();
        let d = Dataset::from_dense(rows, labels, names(2)).unwrap();
        let (train, test) = train_test_split(&d, 0.25, 3).unwrap();
        assert_eq!(train.n_samples() + test.n_samples(), 100);
        assert_eq!(test.class_counts(), vec![20, 5]);
    }
}

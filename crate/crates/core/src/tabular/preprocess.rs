use serde::{Deserialize, Serialize};

use super::{Dataset, TabularError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessMode {
    /// `x <- ln(x - min + 1)` per column.
    Log,
    /// `x <- (x - mean) / std` per non-binary column.
    Standardize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnTransform {
    Log { min: f64 },
    Standardize { mean: f64, std: f64 },
    Identity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PreprocessWarning {
    /// Standard deviation was zero; the column was left unchanged.
    ZeroStd { column: usize },
}

/// Fitted per-column statistics, reusable on held-out data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mode: PreprocessMode,
    pub columns: Vec<ColumnTransform>,
    pub warnings: Vec<PreprocessWarning>,
}

impl ColumnStats {
    pub fn fit(d: &Dataset, mode: PreprocessMode) -> Self {
        let mut warnings = Vec::new();
        let columns = (0..d.n_features())
            .map(|j| {
                let values: Vec<f64> = (0..d.n_samples()).filter_map(|i| d.cell(i, j)).collect();
                if values.is_empty() {
                    return ColumnTransform::Identity;
                }
                match mode {
                    PreprocessMode::Log => {
                        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                        ColumnTransform::Log { min }
                    }
                    PreprocessMode::Standardize => {
                        if values.iter().all(|&v| v == 0.0 || v == 1.0) {
                            return ColumnTransform::Identity;
                        }
                        let n = values.len() as f64;
                        let mean = values.iter().sum::<f64>() / n;
                        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                        let std = var.sqrt();
                        if std == 0.0 {
                            warnings.push(PreprocessWarning::ZeroStd { column: j });
                            ColumnTransform::Identity
                        } else {
                            ColumnTransform::Standardize { mean, std }
                        }
                    }
                }
            })
            .collect();
        Self { mode, columns, warnings }
    }
}

impl ColumnTransform {
    /// Values below a fitted log minimum are clamped to it.
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            ColumnTransform::Log { min } => (x - min).max(0.0).ln_1p(),
            ColumnTransform::Standardize { mean, std } => (x - mean) / std,
            ColumnTransform::Identity => x,
        }
    }
}

/// Applies `mode` column-wise. With `stats` the given statistics are reused
/// (e.g. training statistics on test data); otherwise they are fitted on
/// `d`. Missing cells pass through.
pub fn preprocess(
    d: &Dataset,
    mode: PreprocessMode,
    stats: Option<&ColumnStats>,
) -> Result<(Dataset, ColumnStats), TabularError> {
    let stats = match stats {
        Some(s) => {
            if s.mode != mode {
                return Err(TabularError::StatsMismatch(format!(
                    "statistics fitted for {:?}, requested {:?}",
                    s.mode, mode
                )));
            }
            if s.columns.len() != d.n_features() {
                return Err(TabularError::StatsMismatch(format!(
                    "{} column statistics for {} features",
                    s.columns.len(),
                    d.n_features()
                )));
            }
            s.clone()
        }
        None => ColumnStats::fit(d, mode),
    };
    let m = d.n_features();
    let cells = d
        .cells()
        .iter()
        .enumerate()
        .map(|(k, c)| c.map(|x| stats.columns[k % m].apply(x)))
        .collect();
    Ok((d.with_cells(cells)?, stats))
}

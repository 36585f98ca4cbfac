//! Tabular datasets: storage with explicit missing cells, CSV ingestion,
//! client partitioning and column preprocessing.

mod csv_io;
mod dataset;
mod partition;
mod preprocess;

pub use csv_io::{load_csv, read_csv, write_csv};
pub use dataset::{train_test_split, Dataset};
pub use partition::{partition_clients, ClientPartition, PartitionMode};
pub use preprocess::{preprocess, ColumnStats, ColumnTransform, PreprocessMode, PreprocessWarning};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TabularError {
    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),
    #[error("non-numeric feature value {token:?} at row {row}, column {col}")]
    NonNumericFeature { row: usize, col: usize, token: String },
    #[error("unknown class label {0:?}")]
    UnknownClassLabel(String),
    #[error("invalid dataset shape: {0}")]
    Shape(String),
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("{n_clients} clients requested but client {client} would receive no samples")]
    TooManyClients { n_clients: usize, client: usize },
    #[error("benign class `{0}` not present in the class dictionary")]
    NoBenignClass(String),
    #[error("heterogeneous partition needs at least one attack class")]
    NoAttackClasses,
    #[error("{attack_classes} attack classes cannot be spread over {n_clients} clients at two per client")]
    TooManyAttackClasses { attack_classes: usize, n_clients: usize },
    #[error("preprocessing statistics do not match dataset: {0}")]
    StatsMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! The four-step collaborative pipeline: data selection and local encoder
//! training, encoder selection, private encoding upload, and server
//! classifier training. Also inference through the combined model,
//! unlearning and communication accounting.

mod encoding;
mod ledger;
mod persist;
mod pipeline;
mod unlearn;

pub use encoding::{column_map, encode_with, ColumnSource, EncodingMatrix};
pub use ledger::{communication_ledger, CostLedger, EncoderCost, LedgerInput, PhaseCost, BYTES_PER_PARAM};
pub use persist::{load_model, load_state, save_model, save_state};
pub use pipeline::{
    run_training, EncoderSelection, Federation, PipelineConfig, PipelineModel, ServerState, TrainingRun,
};
pub use unlearn::unlearn_client;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::gbdt::GbdtError;
use crate::privacy::PrivacyError;
use crate::selection::SelectionError;
use crate::tabular::TabularError;

#[derive(Debug, Error)]
pub enum FederationError {
    #[error("no client partitions supplied")]
    NoClients,
    #[error("client partitions disagree on {0}")]
    SchemaMismatch(String),
    #[error("duplicate client id {0}")]
    DuplicateClient(usize),
    #[error("encoder {encoder} expects {expected} features, data has {found}")]
    FeatureDimMismatch { encoder: usize, expected: usize, found: usize },
    #[error("encoding blocks were produced with different column maps")]
    ColumnMapMismatch,
    #[error("no encoding rows reached the server")]
    EmptyEncoding,
    #[error("client {0} is not part of this federation")]
    UnknownClient(usize),
    #[error("unlearning leaves classes {0:?} without an encoder")]
    CoverageLostAfterUnlearn(BTreeSet<usize>),
    #[error("invalid model directory: {0}")]
    Format(String),
    #[error(transparent)]
    Gbdt(#[from] GbdtError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::encoding::{encode_with, EncodingMatrix};
use super::ledger::{communication_ledger, CostLedger, EncoderCost, LedgerInput};
use super::FederationError;
use crate::gbdt::{fit, Forest, HyperParams};
use crate::privacy::{add_laplace, mask_features, mask_labels, DpParams, MaskingParams};
use crate::seed::derive_seed;
use crate::selection::{select_clients, select_encoders, ClientSummary, EncoderRecord};
use crate::tabular::{ClientPartition, Dataset};

const TAG_MASK_FEATURES: &str = "mask-features";
const TAG_MASK_LABELS: &str = "mask-labels";
const TAG_LAPLACE: &str = "laplace";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderSelection {
    /// Greedy minimal class cover.
    Greedy,
    /// Distribute every uploaded encoder (small federations).
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Training budget `B_t` in samples; `None` admits every client.
    pub budget: Option<u64>,
    /// Feature-mask probability `p`.
    pub mask_probability: f64,
    /// Label-noise fraction `q`.
    pub label_noise: f64,
    /// Laplace budget per released encoding; `None` sends encodings in the clear.
    pub epsilon: Option<f64>,
    pub encoder_hyper: HyperParams,
    pub server_hyper: HyperParams,
    pub encoder_selection: EncoderSelection,
    /// Encoders kept regardless of the cover, e.g. ones trained on
    /// suspected zero-day traffic.
    pub must_include: Vec<usize>,
    pub master_seed: u64,
    /// Clients whose encodings never reach the server. If one of their
    /// encoders would be distributed, selection is redone without it.
    pub suppressed_uploads: Vec<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            budget: None,
            mask_probability: 0.1,
            label_noise: 0.2,
            epsilon: None,
            encoder_hyper: HyperParams::default(),
            server_hyper: HyperParams::default(),
            encoder_selection: EncoderSelection::Greedy,
            must_include: Vec::new(),
            master_seed: 0,
            suppressed_uploads: Vec::new(),
        }
    }
}

/// The deployable model: selected encoders feeding the server classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineModel {
    pub class_names: Vec<String>,
    pub selected_encoders: Vec<EncoderRecord>,
    pub server_forest: Forest,
    pub config: PipelineConfig,
}

impl PipelineModel {
    /// Encodes one row (no noise) and classifies the encoding.
    pub fn infer(&self, row: &[Option<f64>]) -> Result<(usize, Vec<f64>), FederationError> {
        let m = self.n_features();
        if row.len() != m {
            return Err(crate::gbdt::GbdtError::DimensionMismatch { expected: m, found: row.len() }.into());
        }
        let mut encoding = Vec::with_capacity(self.server_forest.n_features());
        for e in &self.selected_encoders {
            let probs = e.forest.predict(row)?.probs;
            let kept = probs.len().saturating_sub(1);
            encoding.extend(probs[..kept].iter().map(|&p| Some(p)));
        }
        let p = self.server_forest.predict(&encoding)?;
        Ok((p.class, p.probs))
    }

    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<usize>, FederationError> {
        let encoded = encode_with(&self.selected_encoders, d)?.to_dataset();
        Ok(self.server_forest.predict_classes(&encoded)?)
    }

    pub fn n_features(&self) -> usize {
        self.selected_encoders.first().map_or(0, |e| e.forest.n_features())
    }

    pub fn encoding_width(&self) -> usize {
        self.server_forest.n_features()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }
}

/// What the server holds after training, enough to unlearn a client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerState {
    /// Every client of the federation.
    pub participants: Vec<usize>,
    /// Clients admitted by data selection, in selection order.
    pub selected_clients: Vec<usize>,
    /// Encoders uploaded in step one, by client id.
    pub encoder_pool: Vec<EncoderRecord>,
    /// Classes the distributed encoders must cover.
    pub all_classes: BTreeSet<usize>,
    /// Noised encodings received from each client.
    pub uploads: BTreeMap<usize, EncodingMatrix>,
}

#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub model: PipelineModel,
    pub ledger: CostLedger,
    pub state: ServerState,
}

struct MaskedClient {
    client_id: usize,
    data: Dataset,
}

/// A simulated federation: the clients' masked private data plus the
/// pipeline configuration.
pub struct Federation {
    config: PipelineConfig,
    class_names: Vec<String>,
    clients: Vec<MaskedClient>,
}

impl Federation {
    /// Applies each client's feature masking and label noise with seeds
    /// derived from the master seed. Masking is fixed for the lifetime of
    /// the federation.
    pub fn new(partitions: &[ClientPartition], config: PipelineConfig) -> Result<Self, FederationError> {
        let first = partitions.first().ok_or(FederationError::NoClients)?.dataset();
        for p in partitions {
            if p.dataset().feature_names() != first.feature_names() {
                return Err(FederationError::SchemaMismatch("feature names".into()));
            }
            if p.dataset().class_names() != first.class_names() {
                return Err(FederationError::SchemaMismatch("class dictionary".into()));
            }
        }
        let mut order: Vec<&ClientPartition> = partitions.iter().collect();
        order.sort_by_key(|p| p.client_id());
        if let Some(w) = order.windows(2).find(|w| w[0].client_id() == w[1].client_id()) {
            return Err(FederationError::DuplicateClient(w[0].client_id()));
        }
        let seed = config.master_seed;
        let clients = order
            .par_iter()
            .map(|p| {
                let id = p.client_id() as u64;
                let features = MaskingParams {
                    p: config.mask_probability,
                    q: config.label_noise,
                    seed: derive_seed(seed, TAG_MASK_FEATURES, id),
                };
                let labels = MaskingParams { seed: derive_seed(seed, TAG_MASK_LABELS, id), ..features };
                let masked = mask_features(p.dataset(), &features)?;
                let masked = mask_labels(&masked, &labels)?;
                Ok(MaskedClient { client_id: p.client_id(), data: masked })
            })
            .collect::<Result<Vec<_>, FederationError>>()?;
        Ok(Self { class_names: first.class_names().to_vec(), config, clients })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn client_ids(&self) -> Vec<usize> {
        self.clients.iter().map(|c| c.client_id).collect()
    }

    /// A client's data after masking, as it enters training.
    pub fn masked_data(&self, client_id: usize) -> Option<&Dataset> {
        self.clients.iter().find(|c| c.client_id == client_id).map(|c| &c.data)
    }

    /// Client-side step three: encode own masked data with the
    /// distributed encoders and add Laplace noise.
    pub fn client_encode(
        &self,
        client_id: usize,
        encoders: &[EncoderRecord],
    ) -> Result<EncodingMatrix, FederationError> {
        let data = self.masked_data(client_id).ok_or(FederationError::UnknownClient(client_id))?;
        let clear = encode_with(encoders, data)?;
        match self.config.epsilon {
            None => Ok(clear),
            Some(eps) => {
                let seed = derive_seed(self.config.master_seed, TAG_LAPLACE, client_id as u64);
                Ok(add_laplace(&clear, &DpParams::for_encodings(eps), seed)?)
            }
        }
    }

    pub fn train(&self) -> Result<TrainingRun, FederationError> {
        let cfg = &self.config;
        // Step 1.1: data selection on masked label histograms.
        let summaries: Vec<ClientSummary> = self
            .clients
            .iter()
            .map(|c| ClientSummary::new(c.client_id, c.data.class_counts().iter().map(|&n| n as u64).collect()))
            .collect();
        let selected_clients = select_clients(&summaries, cfg.budget.unwrap_or(u64::MAX))?;
        let mut by_id = selected_clients.clone();
        by_id.sort_unstable();

        // Step 1.2: selected clients train and upload encoders.
        let encoder_pool = by_id
            .par_iter()
            .map(|&id| {
                let data = self.masked_data(id).expect("selected client exists");
                Ok(EncoderRecord::train(id, data, &cfg.encoder_hyper)?)
            })
            .collect::<Result<Vec<_>, FederationError>>()?;
        let all_classes: BTreeSet<usize> =
            encoder_pool.iter().flat_map(|e| e.covered_classes.iter().copied()).collect();

        // Step 2: encoder selection.
        let suppressed: BTreeSet<usize> = cfg.suppressed_uploads.iter().copied().collect();
        let mut encoders = choose_encoders(&encoder_pool, &all_classes, cfg, &BTreeSet::new())?;
        if encoders.iter().any(|e| suppressed.contains(&e.client_id)) {
            encoders = choose_encoders(&encoder_pool, &all_classes, cfg, &suppressed)?;
        }

        // Step 3: private encodings from every admitted, unsuppressed client.
        let uploads: BTreeMap<usize, EncodingMatrix> = by_id
            .par_iter()
            .filter(|id| !suppressed.contains(id))
            .map(|&id| Ok((id, self.client_encode(id, &encoders)?)))
            .collect::<Result<Vec<_>, FederationError>>()?
            .into_iter()
            .collect();

        // Step 4: server classifier over the concatenated encodings.
        let server_forest = fit_server(&uploads, &cfg.server_hyper)?;
        debug_assert_eq!(server_forest.n_features(), super::column_map(&encoders).len());

        let rows_uploaded = uploads.values().map(|u| u.n_rows() as u64).sum();
        let ledger = communication_ledger(&LedgerInput {
            selected_clients: selected_clients.len() as u64,
            uploaded_encoder_params: encoder_pool.iter().map(|e| e.param_count as u64).collect(),
            selected_encoders: encoders
                .iter()
                .map(|e| EncoderCost { params: e.param_count as u64, classes: e.n_covered() as u64 })
                .collect(),
            rows_uploaded,
            budget: cfg.budget,
        });
        let model = PipelineModel {
            class_names: self.class_names.clone(),
            selected_encoders: encoders,
            server_forest,
            config: cfg.clone(),
        };
        let state = ServerState {
            participants: self.client_ids(),
            selected_clients,
            encoder_pool,
            all_classes,
            uploads,
        };
        Ok(TrainingRun { model, ledger, state })
    }

    /// Removes `client_id`'s influence from a finished run, re-encoding
    /// retained clients through this federation when the distributed
    /// encoders change.
    pub fn unlearn(&self, run: &TrainingRun, client_id: usize) -> Result<(PipelineModel, ServerState), FederationError> {
        super::unlearn_client(&run.model, &run.state, client_id, |id, encoders| {
            self.client_encode(id, encoders)
        })
    }
}

/// Distributed encoders for the configured selection mode, ignoring
/// encoders of `excluded` clients.
pub(super) fn choose_encoders(
    pool: &[EncoderRecord],
    all_classes: &BTreeSet<usize>,
    config: &PipelineConfig,
    excluded: &BTreeSet<usize>,
) -> Result<Vec<EncoderRecord>, FederationError> {
    let candidates: Vec<EncoderRecord> =
        pool.iter().filter(|e| !excluded.contains(&e.client_id)).cloned().collect();
    Ok(match config.encoder_selection {
        EncoderSelection::All => {
            let covered: BTreeSet<usize> =
                candidates.iter().flat_map(|e| e.covered_classes.iter().copied()).collect();
            let missing: BTreeSet<usize> = all_classes.difference(&covered).copied().collect();
            if !missing.is_empty() {
                return Err(crate::selection::SelectionError::UncoverableClasses(missing).into());
            }
            candidates
        }
        EncoderSelection::Greedy => {
            let must: Vec<usize> =
                config.must_include.iter().copied().filter(|id| !excluded.contains(id)).collect();
            select_encoders(&candidates, all_classes, &must)?
        }
    })
}

/// Fits the server classifier on uploads concatenated in client-id order.
pub(super) fn fit_server(
    uploads: &BTreeMap<usize, EncodingMatrix>,
    hyper: &HyperParams,
) -> Result<Forest, FederationError> {
    let merged = EncodingMatrix::concat(uploads.values())?;
    if merged.n_rows() == 0 {
        return Err(FederationError::EmptyEncoding);
    }
    Ok(fit(&merged.to_dataset(), hyper)?)
}

/// One-shot convenience: build the federation and train.
pub fn run_training(
    partitions: &[ClientPartition],
    config: PipelineConfig,
) -> Result<(PipelineModel, CostLedger), FederationError> {
    let run = Federation::new(partitions, config)?.train()?;
    Ok((run.model, run.ledger))
}

use std::collections::BTreeSet;

use super::encoding::EncodingMatrix;
use super::pipeline::{choose_encoders, fit_server, PipelineModel, ServerState};
use super::FederationError;
use crate::selection::{EncoderRecord, SelectionError};

/// Removes a client's encodings (and encoder) from a trained model.
///
/// If the client's encoder is distributed, encoders are reselected from
/// the remaining pool and every retained client re-encodes through
/// `reencode`. The server classifier is then refit on what remains. A
/// participant that never uploaded anything leaves the model unchanged.
pub fn unlearn_client<F>(
    model: &PipelineModel,
    state: &ServerState,
    client_id: usize,
    mut reencode: F,
) -> Result<(PipelineModel, ServerState), FederationError>
where
    F: FnMut(usize, &[EncoderRecord]) -> Result<EncodingMatrix, FederationError>,
{
    if !state.participants.contains(&client_id) {
        return Err(FederationError::UnknownClient(client_id));
    }
    let uploaded = state.uploads.contains_key(&client_id);
    let pooled = state.encoder_pool.iter().any(|e| e.client_id == client_id);
    if !uploaded && !pooled {
        return Ok((model.clone(), state.clone()));
    }

    let mut state = state.clone();
    let mut model = model.clone();
    state.uploads.remove(&client_id);
    state.encoder_pool.retain(|e| e.client_id != client_id);
    if !model.config.suppressed_uploads.contains(&client_id) {
        model.config.suppressed_uploads.push(client_id);
        model.config.suppressed_uploads.sort_unstable();
    }

    if model.selected_encoders.iter().any(|e| e.client_id == client_id) {
        let excluded = BTreeSet::from([client_id]);
        let encoders = choose_encoders(&state.encoder_pool, &state.all_classes, &model.config, &excluded)
            .map_err(|e| match e {
                FederationError::Selection(SelectionError::UncoverableClasses(missing)) => {
                    FederationError::CoverageLostAfterUnlearn(missing)
                }
                other => other,
            })?;
        let ids: Vec<usize> = state.uploads.keys().copied().collect();
        for id in ids {
            let fresh = reencode(id, &encoders)?;
            state.uploads.insert(id, fresh);
        }
        model.selected_encoders = encoders;
    }

    model.server_forest = fit_server(&state.uploads, &model.config.server_hyper)?;
    Ok((model, state))
}

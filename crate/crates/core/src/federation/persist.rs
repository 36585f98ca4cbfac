use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::encoding::{column_map, ColumnSource};
use super::pipeline::{PipelineConfig, PipelineModel, ServerState};
use super::FederationError;
use crate::gbdt::Forest;
use crate::selection::EncoderRecord;

const FORMAT: &str = "fedforest.pipeline";
const STATE_FORMAT: &str = "fedforest.server_state";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    class_names: Vec<String>,
    encoders: Vec<usize>,
    encoding_width: usize,
    column_map: Vec<ColumnSource>,
}

#[derive(Serialize, Deserialize)]
struct EncoderFile {
    client_id: usize,
    covered_classes: BTreeSet<usize>,
    param_count: usize,
    forest: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct StateDocument {
    format: String,
    version: u32,
    state: ServerState,
}

fn encoder_path(dir: &Path, client_id: usize) -> std::path::PathBuf {
    dir.join("encoders").join(format!("client_{client_id:04}.json"))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FederationError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes a model directory: manifest, config, one file per selected
/// encoder and the server classifier.
pub fn save_model(model: &PipelineModel, dir: &Path) -> Result<(), FederationError> {
    fs::create_dir_all(dir.join("encoders"))?;
    let map = column_map(&model.selected_encoders);
    let manifest = Manifest {
        format: FORMAT.into(),
        version: VERSION,
        class_names: model.class_names.clone(),
        encoders: model.selected_encoders.iter().map(|e| e.client_id).collect(),
        encoding_width: map.len(),
        column_map: map,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    write_json(&dir.join("config.json"), &model.config)?;
    for e in &model.selected_encoders {
        let file = EncoderFile {
            client_id: e.client_id,
            covered_classes: e.covered_classes.clone(),
            param_count: e.param_count,
            forest: serde_json::from_str(&e.forest.to_json())?,
        };
        write_json(&encoder_path(dir, e.client_id), &file)?;
    }
    fs::write(dir.join("server_forest.json"), model.server_forest.to_json() + "\n")?;
    Ok(())
}

pub fn load_model(dir: &Path) -> Result<PipelineModel, FederationError> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    if manifest.format != FORMAT || manifest.version != VERSION {
        return Err(FederationError::Format(format!("{} v{}", manifest.format, manifest.version)));
    }
    let config: PipelineConfig = serde_json::from_str(&fs::read_to_string(dir.join("config.json"))?)?;
    let mut encoders = Vec::with_capacity(manifest.encoders.len());
    for &id in &manifest.encoders {
        let file: EncoderFile = serde_json::from_str(&fs::read_to_string(encoder_path(dir, id))?)?;
        if file.client_id != id {
            return Err(FederationError::Format(format!("encoder file for {id} names client {}", file.client_id)));
        }
        let forest = Forest::from_json(&file.forest.to_string())?;
        if forest.n_classes() != file.covered_classes.len() {
            return Err(FederationError::Format(format!("encoder {id} class count disagrees with its forest")));
        }
        encoders.push(EncoderRecord {
            client_id: id,
            covered_classes: file.covered_classes,
            param_count: file.param_count,
            forest,
        });
    }
    let server_forest = Forest::from_json(&fs::read_to_string(dir.join("server_forest.json"))?)?;
    if column_map(&encoders) != manifest.column_map || server_forest.n_features() != manifest.encoding_width {
        return Err(FederationError::ColumnMapMismatch);
    }
    if let Some(e) = encoders.windows(2).find(|w| w[0].forest.n_features() != w[1].forest.n_features()) {
        return Err(FederationError::Format(format!("encoder {} has a different input width", e[1].client_id)));
    }
    Ok(PipelineModel { class_names: manifest.class_names, selected_encoders: encoders, server_forest, config })
}

pub fn save_state(state: &ServerState, path: &Path) -> Result<(), FederationError> {
    let doc = StateDocument { format: STATE_FORMAT.into(), version: VERSION, state: state.clone() };
    write_json(path, &doc)
}

pub fn load_state(path: &Path) -> Result<ServerState, FederationError> {
    let doc: StateDocument = serde_json::from_str(&fs::read_to_string(path)?)?;
    if doc.format != STATE_FORMAT || doc.version != VERSION {
        return Err(FederationError::Format(format!("{} v{}", doc.format, doc.version)));
    }
    Ok(doc.state)
}

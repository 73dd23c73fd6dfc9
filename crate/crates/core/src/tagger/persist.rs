//! Versioned model container. JSON is used for the payload: serde emits the
//! shortest f64 representation that round-trips exactly, so save/load is
//! bit-exact for finite values (and training asserts finiteness).

use super::model::TaggerModel;
use super::TaggerError;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Container {
    format_version: u32,
    model: TaggerModel,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

pub fn save_model(model: &TaggerModel, path: &Path) -> Result<(), TaggerError> {
    let container = Container {
        format_version: FORMAT_VERSION,
        model: model.clone(),
    };
    let json = serde_json::to_string(&container)
        .map_err(|e| TaggerError::CorruptContainer(e.to_string()))?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TaggerModel, TaggerError> {
    let text = fs::read_to_string(path)?;
    let probe: VersionProbe =
        serde_json::from_str(&text).map_err(|e| TaggerError::CorruptContainer(e.to_string()))?;
    if probe.format_version != FORMAT_VERSION {
        return Err(TaggerError::FormatVersionMismatch {
            found: probe.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let container: Container =
        serde_json::from_str(&text).map_err(|e| TaggerError::CorruptContainer(e.to_string()))?;
    let mut model = container.model;
    model.vocab.rebuild_indexes();
    Ok(model)
}

//! Versioned JSON model files: `{"schema_version": 1, "kind": ..., "model": ...}`.

use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::models::TrainedModel;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;

pub fn model_to_json(model: &TrainedModel) -> Result<String> {
    let mut value = serde_json::to_value(model)?;
    let Value::Object(map) = &mut value else {
        unreachable!("adjacently tagged enums serialize to objects");
    };
    map.insert("schema_version".into(), SCHEMA_VERSION.into());
    Ok(serde_json::to_string(&value)?)
}

pub fn model_from_json(text: &str) -> Result<TrainedModel> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| Error::CorruptModel(e.to_string()))?;
    let Value::Object(map) = &mut value else {
        return Err(Error::CorruptModel("top level is not an object".into()));
    };
    let version = map
        .remove("schema_version")
        .ok_or_else(|| Error::CorruptModel("missing schema_version".into()))?;
    match version.as_u64() {
        Some(SCHEMA_VERSION) => {}
        Some(v) => return Err(Error::UnsupportedVersion(v)),
        None => {
            return Err(Error::CorruptModel(format!(
                "schema_version {version} is not an integer"
            )))
        }
    }
    serde_json::from_value(value).map_err(|e| Error::CorruptModel(e.to_string()))
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let text = model_to_json(model)?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

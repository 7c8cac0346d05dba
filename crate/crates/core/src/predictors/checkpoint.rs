//! Versioned on-disk model checkpoints.
//!
//! A checkpoint is a JSON document holding every parameter matrix (with its
//! shape) and the fitted standardizer; `serde_json` round-trips f64 values
//! exactly. The format version gates loading.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

use super::PredictorModel;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format_version: u32,
    model: PredictorModel,
}

pub fn save_checkpoint(model: &PredictorModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let doc = Checkpoint {
        format_version: CHECKPOINT_FORMAT_VERSION,
        model: model.clone(),
    };
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CoreError::Checkpoint(format!("serialize: {e}")))?;
    std::fs::write(path, text).map_err(|source| CoreError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<PredictorModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let doc: Checkpoint =
        serde_json::from_str(&text).map_err(|e| CoreError::Checkpoint(format!("parse: {e}")))?;
    if doc.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(CoreError::Checkpoint(format!(
            "format version {} unsupported (expected {CHECKPOINT_FORMAT_VERSION})",
            doc.format_version
        )));
    }
    Ok(doc.model)
}

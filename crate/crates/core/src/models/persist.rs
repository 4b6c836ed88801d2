//! Versioned JSON model files.
//!
//! Every file is one JSON object:
//!
//! ```text
//! {
//!   "format": "ami-model",
//!   "version": 1,
//!   "engine": "logreg" | "gbdt" | "multiclass",
//!   "fingerprint": "<feature layout fingerprint>",
//!   "model": { ...engine parameters and config snapshot... }
//! }
//! ```
//!
//! Floats are written in shortest round-trip form, so loading a saved
//! model reproduces its predictions bit for bit.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{GbdtModel, LinearModel, MulticlassModel};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "ami-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Logreg(LinearModel),
    Gbdt(GbdtModel),
    Multiclass(MulticlassModel),
}

impl SavedModel {
    pub fn engine(&self) -> &'static str {
        match self {
            SavedModel::Logreg(_) => "logreg",
            SavedModel::Gbdt(_) => "gbdt",
            SavedModel::Multiclass(_) => "multiclass",
        }
    }

    pub fn fingerprint(&self) -> &str {
        match self {
            SavedModel::Logreg(m) => &m.fingerprint,
            SavedModel::Gbdt(m) => &m.fingerprint,
            SavedModel::Multiclass(m) => &m.fingerprint,
        }
    }

    fn engine_error(&self, expected: &str) -> Error {
        Error::EngineType {
            expected: expected.into(),
            found: self.engine().into(),
        }
    }

    pub fn into_logreg(self) -> Result<LinearModel> {
        match self {
            SavedModel::Logreg(m) => Ok(m),
            other => Err(other.engine_error("logreg")),
        }
    }

    pub fn into_gbdt(self) -> Result<GbdtModel> {
        match self {
            SavedModel::Gbdt(m) => Ok(m),
            other => Err(other.engine_error("gbdt")),
        }
    }

    pub fn into_multiclass(self) -> Result<MulticlassModel> {
        match self {
            SavedModel::Multiclass(m) => Ok(m),
            other => Err(other.engine_error("multiclass")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    engine: String,
    fingerprint: String,
    model: T,
}

/// Renders a versioned envelope around `payload`.
pub fn to_envelope_string<T: Serialize>(format: &str, engine: &str, fingerprint: &str, payload: &T) -> Result<String> {
    let env = Envelope {
        format: format.to_string(),
        version: MODEL_VERSION,
        engine: engine.to_string(),
        fingerprint: fingerprint.to_string(),
        model: payload,
    };
    let mut s = serde_json::to_string_pretty(&env).map_err(|e| Error::ModelFormat {
        message: e.to_string(),
        offset: 0,
    })?;
    s.push('\n');
    Ok(s)
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

fn json_error(text: &str, e: serde_json::Error) -> Error {
    Error::ModelFormat {
        message: e.to_string(),
        offset: byte_offset(text, e.line(), e.column()),
    }
}

/// Parses an envelope, checking format and version, and returns
/// `(engine, payload)`.
pub fn from_envelope_str<T: DeserializeOwned>(text: &str, format: &str) -> Result<(String, T)> {
    let value: Value = serde_json::from_str(text).map_err(|e| json_error(text, e))?;
    let field = |name: &str| {
        value.get(name).ok_or_else(|| Error::ModelFormat {
            message: format!("missing field `{name}`"),
            offset: 0,
        })
    };
    let found_format = field("format")?.as_str().unwrap_or_default();
    if found_format != format {
        return Err(Error::ModelFormat {
            message: format!("expected format `{format}`, found `{found_format}`"),
            offset: 0,
        });
    }
    let version = field("version")?.as_u64().unwrap_or(0) as u32;
    if version != MODEL_VERSION {
        return Err(Error::Version {
            expected: MODEL_VERSION,
            found: version,
        });
    }
    let engine = field("engine")?.as_str().unwrap_or_default().to_string();
    let payload = T::deserialize(field("model")?).map_err(|e| Error::ModelFormat {
        message: format!("`model` section: {e}"),
        offset: 0,
    })?;
    Ok((engine, payload))
}

pub fn model_to_string(model: &SavedModel) -> Result<String> {
    let fp = model.fingerprint();
    match model {
        SavedModel::Logreg(m) => to_envelope_string(MODEL_FORMAT, "logreg", fp, m),
        SavedModel::Gbdt(m) => to_envelope_string(MODEL_FORMAT, "gbdt", fp, m),
        SavedModel::Multiclass(m) => to_envelope_string(MODEL_FORMAT, "multiclass", fp, m),
    }
}

pub fn model_from_str(text: &str) -> Result<SavedModel> {
    let (engine, payload): (String, Value) = from_envelope_str(text, MODEL_FORMAT)?;
    let decode = |e: serde_json::Error| Error::ModelFormat {
        message: format!("`model` section: {e}"),
        offset: 0,
    };
    match engine.as_str() {
        "logreg" => Ok(SavedModel::Logreg(serde_json::from_value(payload).map_err(decode)?)),
        "gbdt" => Ok(SavedModel::Gbdt(serde_json::from_value(payload).map_err(decode)?)),
        "multiclass" => Ok(SavedModel::Multiclass(serde_json::from_value(payload).map_err(decode)?)),
        other => Err(Error::ModelFormat {
            message: format!("unknown engine `{other}`"),
            offset: 0,
        }),
    }
}

pub fn save_model(model: &SavedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_string(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

/// Provenance written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the canonical JSON of the effective configuration.
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub input_files: Vec<InputFile>,
    /// RFC 3339 wall-clock time of the run.
    pub created: String,
}

fn sorted(v: &Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            Value::Object(keys.into_iter().map(|k| (k.clone(), sorted(&map[k]))).collect())
        }
        Value::Array(items) => Value::Array(items.iter().map(sorted).collect()),
        other => other.clone(),
    }
}

/// Compact JSON with object keys in lexicographic order at every level.
pub fn canonical_json(v: &Value) -> String {
    sorted(v).to_string()
}

pub fn config_hash(config: &Value) -> String {
    hex::encode(Sha256::digest(canonical_json(config).as_bytes()))
}

impl RunManifest {
    pub fn new(command: &str, config: &Value, seed: u64, inputs: &[&Path]) -> Result<Self> {
        let input_files = inputs
            .iter()
            .map(|p| {
                Ok(InputFile {
                    path: p.display().to_string(),
                    sha256: hex::encode(Sha256::digest(std::fs::read(p)?)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RunManifest {
            command: command.to_owned(),
            config_hash: config_hash(config),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            input_files,
            created: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        })
    }
}

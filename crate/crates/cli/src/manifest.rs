//! Run manifests and the canonical config digest.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub input_paths: Vec<String>,
    pub seed: u64,
    pub tool_version: String,
    /// SHA-256 of the canonical JSON form of the effective configuration.
    pub config_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub started: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finished: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, input_paths: Vec<String>, seed: u64, config: &Value) -> Self {
        Self {
            command: command.to_string(),
            input_paths,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest: config_digest(config),
            started: Some(now()),
            finished: None,
        }
    }

    /// Copy without timestamps, for embedding in primary outputs.
    pub fn without_timestamps(&self) -> Self {
        Self { started: None, finished: None, ..self.clone() }
    }

    pub fn finish(&mut self) {
        self.finished = Some(now());
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// JSON with object keys sorted at every level and no whitespace.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

pub fn config_digest(config: &Value) -> String {
    Sha256::digest(canonical_json(config).as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

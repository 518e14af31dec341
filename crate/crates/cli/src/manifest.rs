use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Timestamps {
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

/// Inputs that determine a run. Timestamps are opt-in so that reruns with
/// the same inputs produce byte-identical reports.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub model_hash: Option<String>,
    pub seed: u64,
    pub tool_version: String,
    pub timestamps: Option<Timestamps>,
    pub outputs: Vec<String>,
}

pub fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: String, seed: u64) -> Self {
        Self {
            command,
            model_hash: None,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamps: None,
            outputs: Vec::new(),
        }
    }
}

//! Run manifest: config echo, input digests, tool version, timestamp, and
//! per-cell status, written alongside experiment outputs so every result row
//! is traceable.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::data::Season;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellStatus {
    pub location: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub season: Option<Season>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub status: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub timestamp: String,
    pub config: RunConfig,
    /// Keyed by location (or location/season for per-season files).
    pub inputs: BTreeMap<String, InputDigest>,
    pub cells: Vec<CellStatus>,
    /// Files written by the run, relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(config: RunConfig) -> RunManifest {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            config,
            inputs: BTreeMap::new(),
            cells: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

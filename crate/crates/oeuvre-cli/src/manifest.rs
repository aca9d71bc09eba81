//! Run manifests: every output directory records what produced it.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

/// Provenance of one output directory. Reruns with equal inputs differ
/// only in the timestamp.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// SHA-256 over the papers file bytes then the mentions file bytes.
    pub corpus_hash: Option<String>,
    pub algorithm: Option<String>,
    /// Parameter snapshot (TOML), exactly what the run used.
    pub params: Option<String>,
    pub tool_version: String,
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            corpus_hash: None,
            algorithm: None,
            params: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn with_corpus(mut self, papers: &Path, mentions: &Path) -> CliResult<Self> {
        self.corpus_hash = Some(corpus_hash(papers, mentions)?);
        Ok(self)
    }

    pub fn with_algorithm(mut self, algorithm: &str) -> Self {
        self.algorithm = Some(algorithm.to_string());
        self
    }

    pub fn with_params(mut self, params: String) -> Self {
        self.params = Some(params);
        self
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self).map_err(CliError::validation)?;
        std::fs::write(&path, json + "\n")
            .map_err(|e| CliError::Validation(format!("writing {}: {e}", path.display())))
    }

    pub fn read(dir: &Path) -> CliResult<Self> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Validation(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(CliError::validation)
    }
}

pub fn corpus_hash(papers: &Path, mentions: &Path) -> CliResult<String> {
    let mut hasher = Sha256::new();
    for path in [papers, mentions] {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Validation(format!("reading {}: {e}", path.display())))?;
        hasher.update(&bytes);
    }
    Ok(format!("sha256:{:x}", hasher.finalize()))
}

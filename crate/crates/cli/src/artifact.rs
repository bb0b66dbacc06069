//! Versioned JSON artifacts under the output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use vecont_core::extraction::sha256_hex;

use crate::config::RunConfig;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Stage that produces each artifact, relative to the output directory.
pub const SYNTH_CORPUS: (&str, &str) = ("synth/corpus.jsonl", "synth");
pub const SYNTH_MANIFEST: (&str, &str) = ("synth/synth.json", "synth");
pub const CORPUS: (&str, &str) = ("ingest/corpus.jsonl", "ingest");
pub const INGEST: (&str, &str) = ("ingest/ingest.json", "ingest");
pub const ONTOLOGY: (&str, &str) = ("fit/ontology.json", "fit");
pub const INDEX: (&str, &str) = ("index/index.json", "index");
pub const EXTRACTIONS: (&str, &str) = ("extract/extractions.json", "extract");
pub const CONSISTENCY: (&str, &str) = ("consistency/consistency.json", "consistency");
pub const ACCURACY: (&str, &str) = ("accuracy/accuracy.json", "accuracy");
pub const DISTRIBUTION: (&str, &str) = ("accuracy/distribution.json", "accuracy");
pub const SHIFT: (&str, &str) = ("shift/shift.json", "shift");
pub const PROJECTION: (&str, &str) = ("project/projection.json", "project");
pub const REPORT: &str = "report/report.json";
pub const TABLES: &str = "report/tables";
pub const FIGURES: &str = "figures";

/// Common header of every JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub schema_version: u32,
    pub stage: String,
    pub config_hash: String,
    pub seed: u64,
    /// Upstream files, by path relative to the output directory, with their SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub data: T,
}

pub struct Store {
    root: PathBuf,
    config_hash: String,
    seed: u64,
}

impl Store {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            root: config.out_dir.clone(),
            config_hash: config.hash.clone(),
            seed: config.seed,
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn wrap<T>(&self, stage: &str, inputs: BTreeMap<String, String>, data: T) -> Artifact<T> {
        Artifact {
            schema_version: SCHEMA_VERSION,
            stage: stage.to_string(),
            config_hash: self.config_hash.clone(),
            seed: self.seed,
            inputs,
            data,
        }
    }

    pub fn write_bytes(&self, rel: &str, bytes: &[u8]) -> Result<String, CliError> {
        let path = self.path(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(sha256_hex(bytes))
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<String, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(CliError::stage)?;
        bytes.push(b'\n');
        self.write_bytes(rel, &bytes)
    }

    /// Bytes of an upstream artifact, or an error naming the stage that makes it.
    pub fn read_bytes(&self, (rel, stage): (&str, &'static str)) -> Result<Vec<u8>, CliError> {
        let path = self.path(rel);
        match std::fs::read(&path) {
            Ok(b) => Ok(b),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(CliError::MissingArtifact { path, stage }),
            Err(e) => Err(CliError::io(&path, e)),
        }
    }

    /// Parsed artifact plus the SHA-256 of its file.
    pub fn read<T: DeserializeOwned>(&self, artifact: (&str, &'static str)) -> Result<(Artifact<T>, String), CliError> {
        let bytes = self.read_bytes(artifact)?;
        let parsed: Artifact<T> =
            serde_json::from_slice(&bytes).map_err(|e| CliError::io(self.path(artifact.0), format!("unreadable artifact: {e}")))?;
        if parsed.schema_version != SCHEMA_VERSION {
            return Err(CliError::io(
                self.path(artifact.0),
                format!("schema_version {} is not {SCHEMA_VERSION}; rerun `vecont {}`", parsed.schema_version, artifact.1),
            ));
        }
        Ok((parsed, sha256_hex(&bytes)))
    }
}

/// `inputs` map from (path, sha) pairs.
pub fn inputs<const N: usize>(entries: [(&str, &str); N]) -> BTreeMap<String, String> {
    entries.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

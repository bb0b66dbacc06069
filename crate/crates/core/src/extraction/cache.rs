//! Append-only JSONL store of raw completions.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExtractionError;

/// Request fields recorded next to each response. The system prompt is
/// stored by digest; it is identical for every line of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedRequest {
    pub model: String,
    pub temperature: f64,
    pub attempt: u32,
    pub system_sha256: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub request: CachedRequest,
    pub raw_response: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content hash of everything that determines a completion.
pub fn cache_key(model: &str, system: &str, user: &str, attempt: u32) -> String {
    let mut h = Sha256::new();
    for part in [model.as_bytes(), system.as_bytes(), user.as_bytes()] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    h.update(attempt.to_le_bytes());
    hex::encode(h.finalize())
}

pub struct ResponseCache {
    path: PathBuf,
    entries: Mutex<HashMap<String, String>>,
    writer: Option<Mutex<File>>,
}

impl ResponseCache {
    /// Read-only view of an existing cache file.
    pub fn open(path: &Path) -> Result<Self, ExtractionError> {
        Ok(Self {
            path: path.to_path_buf(),
            entries: Mutex::new(load(path)?),
            writer: None,
        })
    }

    /// Loads whatever exists at `path` and appends new entries to it.
    pub fn open_append(path: &Path) -> Result<Self, ExtractionError> {
        let entries = if path.exists() { load(path)? } else { HashMap::new() };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| io_err(path, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| io_err(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            entries: Mutex::new(entries),
            writer: Some(Mutex::new(file)),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries.lock().expect("cache lock").get(key).cloned()
    }

    /// Appends one line; the first response stored under a key wins.
    pub fn append(&self, entry: &CacheEntry) -> Result<(), ExtractionError> {
        let Some(writer) = &self.writer else {
            return Err(ExtractionError::Cache(format!("{} is opened read-only", self.path.display())));
        };
        let mut line = serde_json::to_string(entry).map_err(|e| ExtractionError::Cache(e.to_string()))?;
        line.push('\n');
        let mut file = writer.lock().expect("cache writer lock");
        file.write_all(line.as_bytes()).map_err(|e| io_err(&self.path, e))?;
        file.flush().map_err(|e| io_err(&self.path, e))?;
        self.entries
            .lock()
            .expect("cache lock")
            .entry(entry.key.clone())
            .or_insert_with(|| entry.raw_response.clone());
        Ok(())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> ExtractionError {
    ExtractionError::Cache(format!("{}: {e}", path.display()))
}

fn load(path: &Path) -> Result<HashMap<String, String>, ExtractionError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut entries = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: CacheEntry = serde_json::from_str(&line)
            .map_err(|e| ExtractionError::Cache(format!("{} line {}: {e}", path.display(), i + 1)))?;
        entries.entry(entry.key).or_insert(entry.raw_response);
    }
    Ok(entries)
}

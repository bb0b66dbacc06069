//! OpenAI-compatible chat-completions transport.

use std::path::PathBuf;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::header::CONTENT_TYPE;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const API_KEY_ENV: &str = "VECONT_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Network only; nothing is cached.
    Live,
    /// Network for cache misses; every fresh response is appended to the cache.
    Record,
    /// Cache only; never touches the network.
    #[default]
    Replay,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "live" => Ok(Self::Live),
            "record" => Ok(Self::Record),
            "replay" => Ok(Self::Replay),
            other => Err(format!("unknown mode `{other}` (expected live, record or replay)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout_secs: u64,
    pub parallelism: usize,
    pub cache_path: Option<PathBuf>,
    pub mode: Mode,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o-mini".into(),
            temperature: 0.0,
            max_retries: 3,
            timeout_secs: 60,
            parallelism: 8,
            cache_path: None,
            mode: Mode::Replay,
        }
    }
}

impl LlmConfig {
    /// Every violated invariant, empty when the config is usable.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.parallelism == 0 {
            out.push("llm.parallelism must be at least 1".to_string());
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            out.push(format!("llm.temperature must be >= 0, got {}", self.temperature));
        }
        if self.model.trim().is_empty() {
            out.push("llm.model is empty".to_string());
        }
        match (&self.cache_path, self.mode) {
            (None, Mode::Replay | Mode::Record) => out.push("llm.cache_path is required in replay and record modes".into()),
            (Some(p), Mode::Replay) if !p.is_file() => {
                out.push(format!("replay cache {} does not exist", p.display()))
            }
            _ => {}
        }
        if self.mode != Mode::Replay && self.endpoint.trim().is_empty() {
            out.push("llm.endpoint is empty".to_string());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("network: {0}")]
    Network(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    Protocol(String),
}

impl TransportError {
    /// Connection problems, rate limits and server errors are worth retrying.
    pub fn is_transient(&self) -> bool {
        match self {
            Self::Network(_) => true,
            Self::Http { status, .. } => *status == 429 || *status >= 500,
            Self::Protocol(_) => false,
        }
    }
}

/// Something that turns a chat request into the assistant's text.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError>;
}

pub struct HttpTransport {
    endpoint: String,
    api_key: Option<String>,
    client: Client,
}

impl HttpTransport {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Result<Self, TransportError> {
        let client = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into(),
            api_key,
            client,
        })
    }

    /// Endpoint and timeout from `cfg`, key from `VECONT_API_KEY`.
    pub fn from_config(cfg: &LlmConfig) -> Result<Self, TransportError> {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::new(cfg.endpoint.clone(), key, Duration::from_secs(cfg.timeout_secs))
    }
}

impl ChatTransport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let body = serde_json::to_vec(request).map_err(|e| TransportError::Protocol(e.to_string()))?;
        let mut builder = self
            .client
            .post(&self.endpoint)
            .header(CONTENT_TYPE, "application/json")
            .body(body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| TransportError::Network(e.to_string()))?;
        let status = response.status();
        let text = response.text().map_err(|e| TransportError::Network(e.to_string()))?;
        if !status.is_success() {
            return Err(TransportError::Http {
                status: status.as_u16(),
                body: text.chars().take(500).collect(),
            });
        }
        let value: Value = serde_json::from_str(&text).map_err(|e| TransportError::Protocol(e.to_string()))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| TransportError::Protocol("missing choices[0].message.content".into()))
    }
}

//! Eliciting grid positions for genres from a chat model.

mod cache;
mod client;
mod parse;
mod prompt;

pub use cache::{cache_key, sha256_hex, CacheEntry, CachedRequest, ResponseCache};
pub use client::{ChatMessage, ChatRequest, ChatTransport, HttpTransport, LlmConfig, Mode, TransportError, API_KEY_ENV};
pub use parse::{parse_position, render_position, ParseError};
pub use prompt::{
    build_system_prompt, default_formulations, default_genres, feature_ranges, validate_formulations,
    FormulationTemplate, DEFAULT_GENRES, PLACEHOLDER,
};

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{DiscretePosition, Ontology};

pub const JSON_REMINDER: &str = "Respond with valid JSON only.";

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("invalid formulations: {}", .0.join("; "))]
    InvalidFormulations(Vec<String>),
    #[error("invalid LLM configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("cache: {0}")]
    Cache(String),
    #[error("{0:?} mode needs a transport")]
    MissingTransport(Mode),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureReason {
    /// The last attempt's completion could not be used.
    Parse { error: ParseError },
    Network { message: String },
    /// Replay found no recorded completion for this attempt.
    CacheMiss { attempt: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub reason: FailureReason,
    pub attempts: u32,
}

impl Failure {
    pub fn label(&self) -> &'static str {
        match &self.reason {
            FailureReason::Parse { error } => match error {
                ParseError::MalformedJson { .. } => "MalformedJson",
                ParseError::MissingLocation => "MissingLocation",
                ParseError::MissingDimension { .. } => "MissingDimension",
                ParseError::IndexOutOfRange { .. } => "IndexOutOfRange",
                ParseError::WrongArity { .. } => "WrongArity",
                ParseError::InvalidIndex { .. } => "InvalidIndex",
            },
            FailureReason::Network { .. } => "NetworkError",
            FailureReason::CacheMiss { .. } => "CacheMiss",
        }
    }
}

/// Outcome of every formulation for one genre, keyed by formulation id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionSet {
    pub genre: String,
    pub results: BTreeMap<String, DiscretePosition>,
    pub failures: BTreeMap<String, Failure>,
}

impl ExtractionSet {
    pub fn positions(&self) -> Vec<DiscretePosition> {
        self.results.values().cloned().collect()
    }

    pub fn attempted(&self) -> usize {
        self.results.len() + self.failures.len()
    }
}

type Clock = Box<dyn Fn() -> u64 + Send + Sync>;

/// Runs prompts through cache and/or transport according to `cfg.mode`.
pub struct Extractor {
    cfg: LlmConfig,
    ontology: Ontology,
    system: String,
    transport: Option<Arc<dyn ChatTransport>>,
    cache: Option<ResponseCache>,
    clock: Clock,
    backoff: Duration,
}

impl Extractor {
    /// In replay mode the transport is dropped unused, so no request can
    /// leave the process.
    pub fn new(
        cfg: LlmConfig,
        ontology: Ontology,
        transport: Option<Arc<dyn ChatTransport>>,
    ) -> Result<Self, ExtractionError> {
        let problems = cfg.problems();
        if !problems.is_empty() {
            return Err(ExtractionError::InvalidConfig(problems));
        }
        let cache = match (cfg.mode, &cfg.cache_path) {
            (Mode::Replay, Some(p)) => Some(ResponseCache::open(p)?),
            (Mode::Record, Some(p)) => Some(ResponseCache::open_append(p)?),
            _ => None,
        };
        let transport = match cfg.mode {
            Mode::Replay => None,
            mode => Some(transport.ok_or(ExtractionError::MissingTransport(mode))?),
        };
        Ok(Self {
            system: build_system_prompt(&ontology),
            cfg,
            ontology,
            transport,
            cache,
            clock: Box::new(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())),
            backoff: Duration::from_millis(500),
        })
    }

    /// Timestamp source for recorded entries.
    pub fn with_clock(mut self, clock: impl Fn() -> u64 + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    /// Base delay between network retries; doubles per retry.
    pub fn with_backoff(mut self, base: Duration) -> Self {
        self.backoff = base;
        self
    }

    pub fn system_prompt(&self) -> &str {
        &self.system
    }

    pub fn extract_genre(
        &self,
        genre: &str,
        formulations: &[FormulationTemplate],
    ) -> Result<ExtractionSet, ExtractionError> {
        Ok(self.extract_all(&[genre.to_string()], formulations)?.remove(0))
    }

    /// All genres x formulations with at most `cfg.parallelism` requests in
    /// flight. Output order follows `genres`.
    pub fn extract_all(
        &self,
        genres: &[String],
        formulations: &[FormulationTemplate],
    ) -> Result<Vec<ExtractionSet>, ExtractionError> {
        validate_formulations(formulations)?;
        let jobs: Vec<(usize, &FormulationTemplate)> = (0..genres.len())
            .flat_map(|g| formulations.iter().map(move |f| (g, f)))
            .collect();
        let run = || -> Vec<Result<DiscretePosition, Failure>> {
            jobs.par_iter().map(|(g, f)| self.query(&f.instantiate(&genres[*g]))).collect()
        };
        let outcomes = if self.cfg.parallelism == 1 {
            jobs.iter().map(|(g, f)| self.query(&f.instantiate(&genres[*g]))).collect()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(self.cfg.parallelism)
                .build()
                .map_err(|e| ExtractionError::Pool(e.to_string()))?
                .install(run)
        };
        let mut sets: Vec<ExtractionSet> = genres
            .iter()
            .map(|g| ExtractionSet {
                genre: g.clone(),
                results: BTreeMap::new(),
                failures: BTreeMap::new(),
            })
            .collect();
        for ((g, f), outcome) in jobs.into_iter().zip(outcomes) {
            match outcome {
                Ok(p) => sets[g].results.insert(f.id.clone(), p),
                Err(e) => {
                    log::debug!("{} / {}: {}", genres[g], f.id, e.label());
                    sets[g].failures.insert(f.id.clone(), e);
                    None
                }
            };
        }
        Ok(sets)
    }

    fn query(&self, user: &str) -> Result<DiscretePosition, Failure> {
        let mut last_error = None;
        for attempt in 0..=self.cfg.max_retries {
            let message = if attempt == 0 {
                user.to_string()
            } else {
                format!("{user}\n\n{JSON_REMINDER}")
            };
            let raw = match self.completion(&message, attempt) {
                Ok(raw) => raw,
                Err(reason) => {
                    // A replay miss after a parse error means the recording
                    // ran with fewer retries; report the parse error.
                    let reason = match (reason, last_error) {
                        (FailureReason::CacheMiss { .. }, Some(error)) if attempt > 0 => FailureReason::Parse { error },
                        (reason, _) => reason,
                    };
                    return Err(Failure { reason, attempts: attempt + 1 });
                }
            };
            match parse_position(&raw, &self.ontology) {
                Ok(p) => return Ok(p),
                Err(e) => last_error = Some(e),
            }
        }
        Err(Failure {
            reason: FailureReason::Parse {
                error: last_error.expect("at least one attempt"),
            },
            attempts: self.cfg.max_retries + 1,
        })
    }

    fn completion(&self, user: &str, attempt: u32) -> Result<String, FailureReason> {
        let key = cache_key(&self.cfg.model, &self.system, user, attempt);
        if let Some(raw) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            return Ok(raw);
        }
        let Some(transport) = &self.transport else {
            return Err(FailureReason::CacheMiss { attempt });
        };
        let request = ChatRequest {
            model: self.cfg.model.clone(),
            messages: vec![ChatMessage::system(self.system.clone()), ChatMessage::user(user)],
            temperature: self.cfg.temperature,
        };
        let mut tries = 0;
        let raw = loop {
            match transport.complete(&request) {
                Ok(raw) => break raw,
                Err(e) if e.is_transient() && tries < self.cfg.max_retries => {
                    log::warn!("transient error ({e}); retrying");
                    std::thread::sleep(self.backoff * 2u32.pow(tries));
                    tries += 1;
                }
                Err(e) => return Err(FailureReason::Network { message: e.to_string() }),
            }
        };
        if let (Mode::Record, Some(cache)) = (self.cfg.mode, &self.cache) {
            let entry = CacheEntry {
                key,
                request: CachedRequest {
                    model: self.cfg.model.clone(),
                    temperature: self.cfg.temperature,
                    attempt,
                    system_sha256: sha256_hex(self.system.as_bytes()),
                    user: user.to_string(),
                },
                raw_response: raw.clone(),
                timestamp: (self.clock)(),
            };
            if let Err(e) = cache.append(&entry) {
                log::error!("{e}");
            }
        }
        Ok(raw)
    }
}

//! Deterministic stand-in for a chat model, answering from the planted
//! clusters of a synthetic corpus. Used to record offline replay caches.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;

use vecont_core::dataset::SynthSpec;
use vecont_core::extraction::{
    ChatRequest, ChatTransport, Extractor, FormulationTemplate, LlmConfig, Mode, TransportError, JSON_REMINDER,
};
use vecont_core::ontology::{DiscretePosition, FeatureVector, Ontology};
use vecont_core::rng::stream_rng;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::stages::{self, Context};

const STREAM: &str = "planted-respondent";
/// Genres per family in [`SynthSpec::planted`].
const GENRE_FAMILY: usize = 5;
const NOISE_RATE: f64 = 0.35;
const PROSE_RATE: f64 = 0.03;
const BROKEN_RATE: f64 = 0.004;

struct Job {
    index: u64,
    genre: usize,
    formulation: usize,
}

pub struct PlantedRespondent {
    ontology: Ontology,
    seed: u64,
    base: Vec<Vec<i32>>,
    family_of: Vec<usize>,
    jobs: HashMap<String, Job>,
}

impl PlantedRespondent {
    pub fn new(
        spec: &SynthSpec,
        ontology: &Ontology,
        genres: &[String],
        formulations: &[FormulationTemplate],
        seed: u64,
    ) -> Result<Self, CliError> {
        let base = genres
            .iter()
            .map(|g| {
                let cluster = spec
                    .clusters
                    .iter()
                    .find(|c| &c.genre == g)
                    .ok_or_else(|| CliError::Stage(format!("no planted cluster for `{g}`")))?;
                let p = ontology.assign_bin(&FeatureVector(cluster.mean.clone())).map_err(CliError::stage)?;
                Ok(p.indices().iter().map(|&i| i32::from(i)).collect())
            })
            .collect::<Result<Vec<Vec<i32>>, CliError>>()?;
        let mut families: Vec<&str> = Vec::new();
        let family_of = formulations
            .iter()
            .map(|f| {
                let name = f.id.rsplit_once('-').map_or(f.id.as_str(), |(head, _)| head);
                families.iter().position(|x| *x == name).unwrap_or_else(|| {
                    families.push(name);
                    families.len() - 1
                })
            })
            .collect();
        let mut jobs = HashMap::new();
        for (gi, g) in genres.iter().enumerate() {
            for (fi, f) in formulations.iter().enumerate() {
                let index = (gi * formulations.len() + fi) as u64;
                jobs.insert(
                    f.instantiate(g),
                    Job {
                        index,
                        genre: gi,
                        formulation: fi,
                    },
                );
            }
        }
        Ok(Self {
            ontology: ontology.clone(),
            seed,
            base,
            family_of,
            jobs,
        })
    }

    /// Offset a formulation family adds; genre families alternate its sign.
    fn family_shift(&self, family: usize, genre: usize) -> Vec<i32> {
        let d = self.ontology.dim_count();
        let sign = if (genre / GENRE_FAMILY) % 2 == 0 { 1 } else { -1 };
        let mut shift = vec![0; d];
        shift[family % d] += sign;
        shift[(3 * family + 1) % d] -= sign;
        shift
    }

    fn position(&self, job: &Job) -> DiscretePosition {
        let top = self.ontology.bins_per_dim() as i32 - 1;
        let mut rng = stream_rng(self.seed, STREAM, 2 * job.index);
        let shift = self.family_shift(self.family_of[job.formulation], job.genre);
        let mut p: Vec<i32> = self.base[job.genre].iter().zip(&shift).map(|(b, s)| b + s).collect();
        if rng.random_bool(NOISE_RATE) {
            let dim = rng.random_range(0..p.len());
            p[dim] += if rng.random_bool(0.5) { 1 } else { -1 };
        }
        DiscretePosition(p.into_iter().map(|i| i.clamp(0, top) as u16).collect())
    }

    fn answer(&self, user: &str) -> Result<String, TransportError> {
        let (prompt, reminded) = match user.strip_suffix(&format!("\n\n{JSON_REMINDER}")) {
            Some(p) => (p, true),
            None => (user, false),
        };
        let job = self
            .jobs
            .get(prompt)
            .ok_or_else(|| TransportError::Http {
                status: 400,
                body: format!("unknown prompt {prompt:?}"),
            })?;
        let mut rng = stream_rng(self.seed, STREAM, 2 * job.index + 1);
        let broken = rng.random_bool(BROKEN_RATE);
        let prose_first = rng.random_bool(PROSE_RATE);
        if broken || (prose_first && !reminded) {
            return Ok(format!("Sure! Here is some {prompt} for you, enjoy the vibe."));
        }
        let p = self.position(job);
        let dict = vecont_core::extraction::render_position(&p, &self.ontology);
        let text = match rng.random_range(0..10) {
            0..5 => format!("```json\n{dict}\n```"),
            5..8 => format!("Here is the location for that mood:\n{dict}\nHope it fits."),
            _ => {
                let list: Vec<String> = p.indices().iter().map(ToString::to_string).collect();
                format!("{{\"location\": [{}]}}", list.join(", "))
            }
        };
        Ok(text)
    }
}

impl ChatTransport for PlantedRespondent {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let user = request
            .messages
            .iter()
            .rev()
            .find(|m| m.role == "user")
            .ok_or_else(|| TransportError::Http {
                status: 400,
                body: "no user message".into(),
            })?;
        self.answer(&user.content)
    }
}

/// Builds the corpus and ontology under `scratch`, then records every
/// completion of the planted respondent into a fresh cache at `cache_out`.
/// The output is byte-identical across runs.
pub fn record_cache(config: &RunConfig, scratch: &Path, cache_out: &Path) -> Result<usize, CliError> {
    let spec = config
        .synth_spec()
        .ok_or_else(|| CliError::Validation(vec!["the fixture needs a [corpus.synth] section".into()]))?;
    let mut config = config.clone();
    config.out_dir = scratch.to_path_buf();
    let no_transport = |_: &LlmConfig| -> Result<Arc<dyn ChatTransport>, TransportError> {
        Err(TransportError::Network("not used".into()))
    };
    let ctx = Context::new(config, &no_transport);
    stages::synth(&ctx)?;
    stages::ingest(&ctx)?;
    stages::fit(&ctx)?;
    let (ontology, _) = stages::load_ontology(&ctx.store)?;
    let c = &ctx.config;
    let respondent = PlantedRespondent::new(&spec, &ontology, &c.genres, &c.formulations, c.seed)?;

    match std::fs::remove_file(cache_out) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => return Err(CliError::io(cache_out, e)),
    }
    if let Some(dir) = cache_out.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let llm = LlmConfig {
        mode: Mode::Record,
        parallelism: 1,
        cache_path: Some(cache_out.to_path_buf()),
        ..c.llm.clone()
    };
    let extractor = Extractor::new(llm, ontology, Some(Arc::new(respondent)))
        .map_err(CliError::stage)?
        .with_clock(|| 0);
    let sets = extractor.extract_all(&c.genres, &c.formulations).map_err(CliError::stage)?;
    Ok(sets.iter().map(|s| s.results.len()).sum())
}

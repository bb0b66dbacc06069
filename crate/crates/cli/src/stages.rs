//! One function per subcommand. Each reads its inputs from the store and
//! writes its artifacts back.

use std::collections::BTreeMap;
use std::io::Cursor;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use vecont_core::analysis::{
    accuracy_suite, consistency_suite, distribution_at_locations, projection_suite, shift_suite, AccuracyReport,
    ConsistencyReport, DistributionReport, ProjectionReport, ShiftReport,
};
use vecont_core::dataset::{
    build_index, ingest as ingest_file, read_jsonl, synthesize, BinnedCorpus, CorpusFormat, GroundTruthIndex,
    Rejection, SongRecord, SynthSpec,
};
use vecont_core::extraction::{
    sha256_hex, ChatTransport, ExtractionSet, Extractor, FailureReason, FormulationTemplate, LlmConfig, Mode,
    TransportError,
};
use vecont_core::ontology::{fit_edges, search_resolution, FeatureVector, Ontology, ResolutionSearch};
use vecont_core::stats::BaselineSpec;

use crate::artifact::{self, inputs, Artifact, Store};
use crate::config::{CorpusSource, RunConfig};
use crate::error::CliError;
use crate::report;

pub type TransportFactory = dyn Fn(&LlmConfig) -> Result<Arc<dyn ChatTransport>, TransportError>;

pub struct Context<'a> {
    pub config: RunConfig,
    pub store: Store,
    pub transport: &'a TransportFactory,
}

impl<'a> Context<'a> {
    pub fn new(config: RunConfig, transport: &'a TransportFactory) -> Self {
        Self {
            store: Store::new(&config),
            config,
            transport,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthData {
    pub songs: usize,
    pub corpus_sha256: String,
    pub spec: SynthSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestData {
    pub source: String,
    pub accepted: usize,
    pub corpus_sha256: String,
    pub rejected: Vec<Rejection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitData {
    /// Ontology file contents, with their own schema version.
    pub ontology: Value,
    pub occupied_fraction: Option<f64>,
    pub search: Option<ResolutionSearch>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionData {
    pub model: String,
    pub temperature: f64,
    pub system_prompt_sha256: String,
    pub formulations: Vec<FormulationTemplate>,
    pub sets: Vec<ExtractionSet>,
}

fn write_corpus(store: &Store, rel: &str, records: &[SongRecord], config: &RunConfig) -> Result<String, CliError> {
    let domains = config.domains();
    let mut text = String::new();
    for r in records {
        text.push_str(&r.to_jsonl(&domains));
        text.push('\n');
    }
    store.write_bytes(rel, text.as_bytes())
}

pub fn synth(ctx: &Context) -> Result<(), CliError> {
    let Some(spec) = ctx.config.synth_spec() else {
        return Err(CliError::Validation(vec!["`synth` needs a [corpus.synth] section".into()]));
    };
    let records = synthesize(&spec).map_err(CliError::stage)?;
    let sha = write_corpus(&ctx.store, artifact::SYNTH_CORPUS.0, &records, &ctx.config)?;
    let data = SynthData {
        songs: records.len(),
        corpus_sha256: sha,
        spec,
    };
    ctx.store.write_json(artifact::SYNTH_MANIFEST.0, &ctx.store.wrap("synth", BTreeMap::new(), data))?;
    Ok(())
}

pub fn ingest(ctx: &Context) -> Result<(), CliError> {
    let (path, label) = match &ctx.config.corpus {
        CorpusSource::File(p) => {
            if !p.is_file() {
                return Err(CliError::Validation(vec![format!("corpus file {} does not exist", p.display())]));
            }
            let label = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
            (p.clone(), label)
        }
        CorpusSource::Synth(_) => {
            ctx.store.read_bytes(artifact::SYNTH_CORPUS)?;
            (ctx.store.path(artifact::SYNTH_CORPUS.0), artifact::SYNTH_CORPUS.0.to_string())
        }
    };
    let format = CorpusFormat::from_path(&path)
        .ok_or_else(|| CliError::Validation(vec![format!("{}: expected a .jsonl or .csv corpus", path.display())]))?;
    let source_bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
    let outcome = ingest_file(&path, format, &ctx.config.domains()).map_err(CliError::stage)?;
    for r in outcome.rejected.iter().take(20) {
        log::warn!("rejected line {}: {}", r.line, r.reason);
    }
    if outcome.records.is_empty() {
        return Err(CliError::Stage(format!("{}: no usable songs", path.display())));
    }
    let sha = write_corpus(&ctx.store, artifact::CORPUS.0, &outcome.records, &ctx.config)?;
    let data = IngestData {
        source: label.clone(),
        accepted: outcome.records.len(),
        corpus_sha256: sha,
        rejected: outcome.rejected,
    };
    let inputs = inputs([(label.as_str(), sha256_hex(&source_bytes).as_str())]);
    ctx.store.write_json(artifact::INGEST.0, &ctx.store.wrap("ingest", inputs, data))?;
    Ok(())
}

fn load_corpus(ctx: &Context) -> Result<(Vec<SongRecord>, String), CliError> {
    let bytes = ctx.store.read_bytes(artifact::CORPUS)?;
    let outcome = read_jsonl(Cursor::new(&bytes), &ctx.config.domains()).map_err(CliError::stage)?;
    if !outcome.rejected.is_empty() {
        return Err(CliError::Stage(format!(
            "{} has {} invalid lines; rerun `vecont ingest`",
            artifact::CORPUS.0,
            outcome.rejected.len()
        )));
    }
    Ok((outcome.records, sha256_hex(&bytes)))
}

pub fn fit(ctx: &Context) -> Result<(), CliError> {
    let (records, corpus_sha) = load_corpus(ctx)?;
    let features: Vec<FeatureVector> = records.iter().map(|r| r.features.clone()).collect();
    let domains = ctx.config.domains();
    let o = &ctx.config.ontology;
    let (bins, search) = match o.bins {
        Some(n) => (n, None),
        None => {
            let s = search_resolution(&domains, &features, o.density_threshold, o.max_bins).map_err(CliError::stage)?;
            log::info!("resolution search chose n = {} ({:.3} occupied)", s.bins, s.occupancy);
            (s.bins, Some(s))
        }
    };
    let (ontology, warnings) = fit_edges(&domains, &features, bins).map_err(CliError::stage)?;
    let occupied_fraction = search.as_ref().map(|s| s.occupancy);
    let data = FitData {
        ontology: serde_json::from_str(&ontology.to_json()).map_err(CliError::stage)?,
        occupied_fraction,
        search,
        warnings: warnings.iter().map(ToString::to_string).collect(),
    };
    let inputs = inputs([(artifact::CORPUS.0, corpus_sha.as_str())]);
    ctx.store.write_json(artifact::ONTOLOGY.0, &ctx.store.wrap("fit", inputs, data))?;
    Ok(())
}

pub fn load_ontology(store: &Store) -> Result<(Ontology, String), CliError> {
    let (a, sha): (Artifact<FitData>, _) = store.read(artifact::ONTOLOGY)?;
    let ontology = Ontology::from_json(&a.data.ontology.to_string()).map_err(CliError::stage)?;
    Ok((ontology, sha))
}

pub fn index(ctx: &Context) -> Result<(), CliError> {
    let (ontology, ontology_sha) = load_ontology(&ctx.store)?;
    let (records, corpus_sha) = load_corpus(ctx)?;
    let index = build_index(&ontology, &records).map_err(CliError::stage)?;
    let data: Value = serde_json::from_str(&index.to_json()).map_err(CliError::stage)?;
    let inputs = inputs([(artifact::CORPUS.0, corpus_sha.as_str()), (artifact::ONTOLOGY.0, ontology_sha.as_str())]);
    ctx.store.write_json(artifact::INDEX.0, &ctx.store.wrap("index", inputs, data))?;
    Ok(())
}

fn load_index(store: &Store) -> Result<(GroundTruthIndex, String), CliError> {
    let (a, sha): (Artifact<Value>, _) = store.read(artifact::INDEX)?;
    let index = GroundTruthIndex::from_json(&a.data.to_string()).map_err(CliError::stage)?;
    Ok((index, sha))
}

pub fn extract(ctx: &Context) -> Result<(), CliError> {
    let (ontology, ontology_sha) = load_ontology(&ctx.store)?;
    let cfg = ctx.config.llm.clone();
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(CliError::Validation(problems));
    }
    let transport = match cfg.mode {
        Mode::Replay => None,
        _ => Some((ctx.transport)(&cfg).map_err(|e| CliError::Network(e.to_string()))?),
    };
    log::info!(
        "extracting {} genres x {} formulations ({:?} mode)",
        ctx.config.genres.len(),
        ctx.config.formulations.len(),
        cfg.mode
    );
    let extractor = Extractor::new(cfg.clone(), ontology, transport).map_err(CliError::stage)?;
    let sets = extractor
        .extract_all(&ctx.config.genres, &ctx.config.formulations)
        .map_err(CliError::stage)?;
    let network_failures = sets
        .iter()
        .flat_map(|s| s.failures.values())
        .filter(|f| matches!(f.reason, FailureReason::Network { .. }))
        .count();
    let data = ExtractionData {
        model: cfg.model,
        temperature: cfg.temperature,
        system_prompt_sha256: sha256_hex(extractor.system_prompt().as_bytes()),
        formulations: ctx.config.formulations.clone(),
        sets,
    };
    let inputs = inputs([(artifact::ONTOLOGY.0, ontology_sha.as_str())]);
    ctx.store.write_json(artifact::EXTRACTIONS.0, &ctx.store.wrap("extract", inputs, data))?;
    if network_failures > 0 {
        return Err(CliError::Network(format!(
            "{network_failures} queries failed on the network; rerun `vecont extract --mode record` to retry only those"
        )));
    }
    Ok(())
}

pub fn load_extractions(store: &Store) -> Result<(ExtractionData, String), CliError> {
    let (a, sha): (Artifact<ExtractionData>, _) = store.read(artifact::EXTRACTIONS)?;
    Ok((a.data, sha))
}

pub fn consistency(ctx: &Context) -> Result<(), CliError> {
    let (ontology, _) = load_ontology(&ctx.store)?;
    let (ex, ex_sha) = load_extractions(&ctx.store)?;
    let a = &ctx.config.analysis;
    let baseline = BaselineSpec {
        points_per_group: a.points_per_group,
        groups: a.baseline_groups,
        seed: ctx.config.seed,
        bins_per_dim: ontology.bins_per_dim(),
        dims: ontology.dim_count(),
    };
    let report = consistency_suite(&ex.sets, &baseline).map_err(CliError::stage)?;
    let inputs = inputs([(artifact::EXTRACTIONS.0, ex_sha.as_str())]);
    ctx.store.write_json(artifact::CONSISTENCY.0, &ctx.store.wrap("consistency", inputs, report))?;
    Ok(())
}

pub fn accuracy(ctx: &Context) -> Result<(), CliError> {
    let (ontology, ontology_sha) = load_ontology(&ctx.store)?;
    let (index, index_sha) = load_index(&ctx.store)?;
    let (ex, ex_sha) = load_extractions(&ctx.store)?;
    let (records, corpus_sha) = load_corpus(ctx)?;
    let a = &ctx.config.analysis;
    let seed = ctx.config.seed;

    let report = accuracy_suite(&ex.sets, &index, a.accuracy_pairs, a.min_count, seed).map_err(CliError::stage)?;
    let ins = inputs([(artifact::EXTRACTIONS.0, ex_sha.as_str()), (artifact::INDEX.0, index_sha.as_str())]);
    ctx.store.write_json(artifact::ACCURACY.0, &ctx.store.wrap("accuracy", ins, report))?;

    let corpus = BinnedCorpus::new(&ontology, records).map_err(CliError::stage)?;
    let distribution = distribution_at_locations(&ex.sets, &corpus, a.sample_cap, seed).map_err(CliError::stage)?;
    let ins = inputs([
        (artifact::CORPUS.0, corpus_sha.as_str()),
        (artifact::EXTRACTIONS.0, ex_sha.as_str()),
        (artifact::ONTOLOGY.0, ontology_sha.as_str()),
    ]);
    ctx.store.write_json(artifact::DISTRIBUTION.0, &ctx.store.wrap("accuracy", ins, distribution))?;
    Ok(())
}

pub fn shift(ctx: &Context) -> Result<(), CliError> {
    let (ontology, _) = load_ontology(&ctx.store)?;
    let (ex, ex_sha) = load_extractions(&ctx.store)?;
    let a = &ctx.config.analysis;
    let report = shift_suite(&ex.sets, ontology.bins_per_dim(), a.k, a.shift_rounds, ctx.config.seed).map_err(CliError::stage)?;
    let inputs = inputs([(artifact::EXTRACTIONS.0, ex_sha.as_str())]);
    ctx.store.write_json(artifact::SHIFT.0, &ctx.store.wrap("shift", inputs, report))?;
    Ok(())
}

pub fn project(ctx: &Context) -> Result<(), CliError> {
    let (ontology, _) = load_ontology(&ctx.store)?;
    let (index, index_sha) = load_index(&ctx.store)?;
    let (ex, ex_sha) = load_extractions(&ctx.store)?;
    let a = &ctx.config.analysis;
    let report = projection_suite(
        &ex.sets,
        Some(&index),
        ontology.bins_per_dim(),
        &ctx.config.heatmap_genres,
        a.heatmap_grid,
        &a.arrow_formulation,
        a.min_count,
    )
    .map_err(CliError::stage)?;
    let inputs = inputs([(artifact::EXTRACTIONS.0, ex_sha.as_str()), (artifact::INDEX.0, index_sha.as_str())]);
    ctx.store.write_json(artifact::PROJECTION.0, &ctx.store.wrap("project", inputs, report))?;
    Ok(())
}

/// Every analysis artifact the report draws on.
pub struct Analyses {
    pub extractions: (ExtractionData, String),
    pub consistency: (ConsistencyReport, String),
    pub accuracy: (AccuracyReport, String),
    pub distribution: (DistributionReport, String),
    pub shift: (ShiftReport, String),
    pub projection: (ProjectionReport, String),
}

impl Analyses {
    pub fn load(store: &Store) -> Result<Self, CliError> {
        fn data<T: serde::de::DeserializeOwned>(
            store: &Store,
            which: (&str, &'static str),
        ) -> Result<(T, String), CliError> {
            store.read::<T>(which).map(|(a, sha)| (a.data, sha))
        }
        Ok(Self {
            extractions: load_extractions(store)?,
            consistency: data(store, artifact::CONSISTENCY)?,
            accuracy: data(store, artifact::ACCURACY)?,
            distribution: data(store, artifact::DISTRIBUTION)?,
            shift: data(store, artifact::SHIFT)?,
            projection: data(store, artifact::PROJECTION)?,
        })
    }
}

pub fn report(ctx: &Context) -> Result<(), CliError> {
    let analyses = Analyses::load(&ctx.store)?;
    report::write_all(&ctx.store, &ctx.config, &analyses)
}

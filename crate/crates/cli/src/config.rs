//! Run configuration: one TOML file per experiment.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use vecont_core::dataset::SynthSpec;
use vecont_core::extraction::{
    default_formulations, default_genres, sha256_hex, validate_formulations, ExtractionError, FormulationTemplate,
    LlmConfig,
};
use vecont_core::ontology::DimensionDomain;

use crate::error::CliError;

/// Genres shown in the heatmap and distribution figures when the config
/// names none.
pub const SHOWCASE_GENRES: [&str; 10] = [
    "jazz", "classical", "latin", "r&b", "metal", "pop", "punk", "rock", "ska", "trance",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub total_count: usize,
    #[serde(default = "default_secondary_rate")]
    pub secondary_rate: f64,
}

fn default_secondary_rate() -> f64 {
    0.25
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    /// `.jsonl` or `.csv`; relative to the config file.
    pub path: Option<PathBuf>,
    pub synth: Option<SynthSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OntologySection {
    /// Fixed resolution; searched when absent.
    pub bins: Option<usize>,
    pub density_threshold: f64,
    pub max_bins: usize,
}

impl Default for OntologySection {
    fn default() -> Self {
        Self {
            bins: None,
            density_threshold: 0.5,
            max_bins: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub k: usize,
    pub baseline_groups: usize,
    pub points_per_group: usize,
    pub accuracy_pairs: usize,
    pub min_count: u64,
    pub sample_cap: usize,
    pub shift_rounds: usize,
    pub heatmap_genres: Option<Vec<String>>,
    pub heatmap_grid: usize,
    pub arrow_formulation: String,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            k: 5,
            baseline_groups: 1000,
            points_per_group: 47,
            accuracy_pairs: 10_000,
            min_count: 0,
            sample_cap: 50,
            shift_rounds: 200,
            heatmap_genres: None,
            heatmap_grid: 40,
            arrow_formulation: "action-03".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: u64,
    #[serde(default = "default_out_dir")]
    out_dir: PathBuf,
    genres: Option<Vec<String>>,
    formulations: Option<Vec<FormulationTemplate>>,
    #[serde(default)]
    corpus: CorpusSection,
    #[serde(default)]
    ontology: OntologySection,
    #[serde(default)]
    llm: LlmConfig,
    #[serde(default)]
    analysis: AnalysisSection,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorpusSource {
    File(PathBuf),
    Synth(SynthSection),
}

/// A validated config with every path resolved against the config file's
/// directory.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub path: PathBuf,
    /// SHA-256 of the config file bytes.
    pub hash: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub genres: Vec<String>,
    pub formulations: Vec<FormulationTemplate>,
    pub corpus: CorpusSource,
    pub ontology: OntologySection,
    pub llm: LlmConfig,
    pub analysis: AnalysisSection,
    pub heatmap_genres: Vec<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let text = String::from_utf8(bytes.clone()).map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))?;
        let raw: RawConfig = toml::from_str(&text).map_err(|e| CliError::Validation(vec![e.to_string()]))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::resolve(raw, path, &base, sha256_hex(&bytes))
    }

    fn resolve(raw: RawConfig, path: &Path, base: &Path, hash: String) -> Result<Self, CliError> {
        let mut problems = Vec::new();
        let genres = raw.genres.unwrap_or_else(default_genres);
        let formulations = raw.formulations.unwrap_or_else(default_formulations);

        if genres.is_empty() {
            problems.push("genres is empty".to_string());
        }
        let mut seen = HashSet::new();
        for g in &genres {
            if g.trim().is_empty() {
                problems.push("genres contains an empty name".into());
            } else if !seen.insert(g.as_str()) {
                problems.push(format!("genre `{g}` is listed twice"));
            }
        }
        match validate_formulations(&formulations) {
            Err(ExtractionError::InvalidFormulations(list)) => problems.extend(list),
            Err(e) => problems.push(e.to_string()),
            Ok(()) => {}
        }

        let corpus = match (raw.corpus.path, raw.corpus.synth) {
            (Some(p), None) => Some(CorpusSource::File(base.join(p))),
            (None, Some(s)) => {
                if s.total_count < genres.len().max(1) {
                    problems.push(format!("corpus.synth.total_count {} is below the genre count", s.total_count));
                }
                if !(0.0..=1.0).contains(&s.secondary_rate) {
                    problems.push(format!("corpus.synth.secondary_rate {} outside [0, 1]", s.secondary_rate));
                }
                Some(CorpusSource::Synth(s))
            }
            (Some(_), Some(_)) => {
                problems.push("corpus: give either path or synth, not both".into());
                None
            }
            (None, None) => {
                problems.push("corpus: one of path or synth is required".into());
                None
            }
        };

        let o = &raw.ontology;
        if let Some(n) = o.bins {
            if n == 0 || n > usize::from(u16::MAX) {
                problems.push(format!("ontology.bins {n} outside 1..=65535"));
            }
        }
        if !(o.density_threshold > 0.0 && o.density_threshold <= 1.0) {
            problems.push(format!("ontology.density_threshold {} outside (0, 1]", o.density_threshold));
        }
        if o.max_bins == 0 {
            problems.push("ontology.max_bins must be at least 1".into());
        }

        let a = &raw.analysis;
        for (name, value, min) in [
            ("k", a.k, 1),
            ("baseline_groups", a.baseline_groups, 2),
            ("points_per_group", a.points_per_group, 2),
            ("accuracy_pairs", a.accuracy_pairs, 2),
            ("sample_cap", a.sample_cap, 1),
            ("shift_rounds", a.shift_rounds, 2),
            ("heatmap_grid", a.heatmap_grid, 1),
        ] {
            if value < min {
                problems.push(format!("analysis.{name} must be at least {min}, got {value}"));
            }
        }
        if !formulations.iter().any(|f| f.id == a.arrow_formulation) {
            problems.push(format!("analysis.arrow_formulation `{}` is not a configured formulation id", a.arrow_formulation));
        }
        let heatmap_genres = match &a.heatmap_genres {
            Some(list) => {
                for g in list.iter().filter(|g| !genres.contains(g)) {
                    problems.push(format!("analysis.heatmap_genres: `{g}` is not a configured genre"));
                }
                list.clone()
            }
            None => {
                let showcase: Vec<String> = SHOWCASE_GENRES.iter().filter(|g| genres.iter().any(|c| c == *g)).map(|g| g.to_string()).collect();
                if showcase.is_empty() {
                    genres.iter().take(SHOWCASE_GENRES.len()).cloned().collect()
                } else {
                    showcase
                }
            }
        };

        if !problems.is_empty() {
            return Err(CliError::Validation(problems));
        }
        let mut llm = raw.llm;
        llm.cache_path = llm.cache_path.map(|p| base.join(p));
        Ok(Self {
            path: path.to_path_buf(),
            hash,
            seed: raw.seed,
            out_dir: base.join(raw.out_dir),
            genres,
            formulations,
            corpus: corpus.expect("checked above"),
            ontology: raw.ontology,
            llm,
            analysis: raw.analysis,
            heatmap_genres,
        })
    }

    pub fn domains(&self) -> Vec<DimensionDomain> {
        DimensionDomain::audio_features()
    }

    pub fn synth_spec(&self) -> Option<SynthSpec> {
        match &self.corpus {
            CorpusSource::Synth(s) => {
                let mut spec = SynthSpec::planted(self.domains(), &self.genres, s.total_count, self.seed);
                spec.secondary_rate = s.secondary_rate;
                Some(spec)
            }
            CorpusSource::File(_) => None,
        }
    }
}

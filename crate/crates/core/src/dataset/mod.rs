//! Song corpora and the ground-truth genre index.

mod index;
mod record;
mod synth;

pub use index::{
    build_index, genre_centroid, heatmap_grid, BinEntry, BinnedCorpus, GenreCentroid,
    GroundTruthIndex, HeatmapGrid, SongSample,
};
pub use record::{ingest, read_csv, read_jsonl, Artist, CorpusFormat, IngestOutcome, Rejection, SongRecord};
pub use synth::{apportion, synthesize, ClusterSpec, SynthSpec};

use thiserror::Error;

use crate::ontology::OntologyError;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: missing required fields {missing:?}")]
    Schema { line: usize, missing: Vec<String> },
    #[error("song `{song}`: {source}")]
    OutOfDomain {
        song: String,
        #[source]
        source: OntologyError,
    },
    #[error("genre `{0}` does not occur in the index")]
    GenreAbsent(String),
    #[error("projector needs at least two components, has {0}")]
    UnfittedProjector(usize),
    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),
    #[error("sample cap must be at least 1")]
    ZeroCap,
    #[error("heatmap grid must have at least one cell per side")]
    ZeroGrid,
    #[error("index file: {0}")]
    IndexFile(String),
}

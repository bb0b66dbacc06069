//! Consistency, accuracy and formulation-shift suites over extraction sets.

mod accuracy;
mod consistency;
mod projection;
mod shift;

pub use accuracy::{
    accuracy_suite, distribution_at_locations, genre_tokens, AccuracyReport, DistributionReport, GenreAccuracy,
    GenreDistribution, ACCURACY_METRICS,
};
pub use consistency::{
    baseline_metrics, consistency_suite, spread_metrics, ConsistencyReport, GenreConsistency, SpreadMetrics,
    METRICS, RANK_TOLERANCE,
};
pub use projection::{projection_suite, Arrow, GenreProjection, ProjectionReport};
pub use shift::{exact_cosine, shift_suite, shift_vectors, FormulationShift, ShiftReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DatasetError;
use crate::geometry::GeometryError;
use crate::stats::StatsError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("no genre has enough successful positions")]
    NothingToAnalyse,
    #[error("k must be at least 1")]
    ZeroNeighbours,
}

/// A genre left out of a suite, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Excluded {
    pub genre: String,
    pub reason: String,
}

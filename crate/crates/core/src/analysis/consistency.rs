use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AnalysisError, Excluded, SCHEMA_VERSION};
use crate::extraction::ExtractionSet;
use crate::geometry::{
    affine_dimension, ball_volume_fraction, centroid_distances, mean_pairwise_distance, PointCloud,
};
use crate::ontology::{grid_point, DiscretePosition};
use crate::stats::{compare, sample_uniform_grid, BaselineSpec, ComparisonResult};

pub const RANK_TOLERANCE: f64 = 1e-9;

pub const METRICS: [&str; 6] = [
    "unique_locations",
    "mean_centroid_distance",
    "mean_pairwise_distance",
    "affine_dim",
    "volume_fraction_mean_radius",
    "volume_fraction_max_radius",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadMetrics {
    pub unique_locations: usize,
    pub mean_centroid_distance: f64,
    pub max_centroid_distance: f64,
    pub mean_pairwise_distance: f64,
    pub affine_dim: usize,
    pub volume_fraction_mean_radius: f64,
    pub volume_fraction_max_radius: f64,
}

impl SpreadMetrics {
    pub fn get(&self, metric: &str) -> Option<f64> {
        Some(match metric {
            "unique_locations" => self.unique_locations as f64,
            "mean_centroid_distance" => self.mean_centroid_distance,
            "max_centroid_distance" => self.max_centroid_distance,
            "mean_pairwise_distance" => self.mean_pairwise_distance,
            "affine_dim" => self.affine_dim as f64,
            "volume_fraction_mean_radius" => self.volume_fraction_mean_radius,
            "volume_fraction_max_radius" => self.volume_fraction_max_radius,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenreConsistency {
    pub genre: String,
    pub total_queries: usize,
    pub successful_queries: usize,
    #[serde(flatten)]
    pub metrics: SpreadMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub schema_version: u32,
    pub dims: usize,
    pub bins_per_dim: usize,
    pub rank_tolerance: f64,
    pub baseline: BaselineSpec,
    pub genres: Vec<GenreConsistency>,
    pub excluded: Vec<Excluded>,
    /// Keyed by metric name, observed per-genre values against per-group baseline values.
    pub comparisons: BTreeMap<String, ComparisonResult>,
    /// Volume of the ball whose radius is the baseline's mean max centroid distance.
    pub baseline_volume_at_mean_max_radius: f64,
}

/// All spread measures of one group of grid positions (at least two).
pub fn spread_metrics(positions: &[DiscretePosition], bins_per_dim: usize) -> Result<SpreadMetrics, AnalysisError> {
    let unique_locations = positions.iter().collect::<HashSet<_>>().len();
    let cloud = PointCloud::new(positions.iter().map(|p| grid_point(p, bins_per_dim).0).collect())?;
    let dists = centroid_distances(&cloud);
    let mean_cd = dists.iter().sum::<f64>() / dists.len() as f64;
    let max_cd = dists.iter().copied().fold(0.0, f64::max);
    let d = cloud.dim();
    Ok(SpreadMetrics {
        unique_locations,
        mean_centroid_distance: mean_cd,
        max_centroid_distance: max_cd,
        mean_pairwise_distance: mean_pairwise_distance(&cloud)?,
        affine_dim: affine_dimension(&cloud, RANK_TOLERANCE)?,
        volume_fraction_mean_radius: ball_volume_fraction(d, mean_cd)?,
        volume_fraction_max_radius: ball_volume_fraction(d, max_cd)?,
    })
}

/// Spread metrics of every uniform baseline group.
pub fn baseline_metrics(spec: &BaselineSpec) -> Result<Vec<SpreadMetrics>, AnalysisError> {
    sample_uniform_grid(spec)?
        .par_iter()
        .map(|group| spread_metrics(group, spec.bins_per_dim))
        .collect()
}

/// Spread of each genre's extracted positions, compared with uniform
/// random groups of the same grid. Genres with fewer than two successful
/// positions are excluded and listed.
pub fn consistency_suite(
    sets: &[ExtractionSet],
    baseline: &BaselineSpec,
) -> Result<ConsistencyReport, AnalysisError> {
    let mut excluded = Vec::new();
    let mut usable = Vec::new();
    for set in sets {
        if set.results.len() < 2 {
            excluded.push(Excluded {
                genre: set.genre.clone(),
                reason: format!("{} successful positions, need 2", set.results.len()),
            });
        } else {
            usable.push(set);
        }
    }
    let genres: Vec<GenreConsistency> = usable
        .par_iter()
        .map(|set| {
            Ok(GenreConsistency {
                genre: set.genre.clone(),
                total_queries: set.attempted(),
                successful_queries: set.results.len(),
                metrics: spread_metrics(&set.positions(), baseline.bins_per_dim)?,
            })
        })
        .collect::<Result<_, AnalysisError>>()?;
    let base = baseline_metrics(baseline)?;
    let comparisons = METRICS
        .iter()
        .map(|&m| {
            let observed: Vec<f64> = genres.iter().filter_map(|g| g.metrics.get(m)).collect();
            let reference: Vec<f64> = base.iter().filter_map(|b| b.get(m)).collect();
            (m.to_string(), compare(&observed, &reference))
        })
        .collect();
    let mean_max = base.iter().map(|b| b.max_centroid_distance).sum::<f64>() / base.len() as f64;
    Ok(ConsistencyReport {
        schema_version: SCHEMA_VERSION,
        dims: baseline.dims,
        bins_per_dim: baseline.bins_per_dim,
        rank_tolerance: RANK_TOLERANCE,
        baseline: *baseline,
        genres,
        excluded,
        comparisons,
        baseline_volume_at_mean_max_radius: ball_volume_fraction(baseline.dims, mean_max)?,
    })
}

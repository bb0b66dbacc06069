use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, SCHEMA_VERSION};
use crate::dataset::{genre_centroid, heatmap_grid, DatasetError, GroundTruthIndex, HeatmapGrid};
use crate::extraction::ExtractionSet;
use crate::geometry::{centroid, fit_pca, hull_2d, PcaModel, PointCloud};
use crate::ontology::grid_point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenreProjection {
    pub genre: String,
    /// Keyed by formulation id.
    pub points: BTreeMap<String, [f64; 2]>,
    /// Counter-clockwise.
    pub hull: Vec<[f64; 2]>,
    pub extraction_centroid: [f64; 2],
    pub ground_truth_centroid: Option<[f64; 2]>,
}

/// From a genre's extraction centroid to where one formulation put it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arrow {
    pub genre: String,
    pub from: [f64; 2],
    pub to: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub schema_version: u32,
    pub pca: PcaModel,
    pub explained_variance_ratio: Vec<f64>,
    pub genres: Vec<GenreProjection>,
    pub heatmaps: Vec<HeatmapGrid>,
    pub arrow_formulation: String,
    pub arrows: Vec<Arrow>,
}

fn xy(v: Vec<f64>) -> [f64; 2] {
    [v[0], v[1]]
}

/// Fits a 2-D PCA on every extracted point of every genre and maps points,
/// hulls, centroids and heatmaps through that one projection.
pub fn projection_suite(
    sets: &[ExtractionSet],
    index: Option<&GroundTruthIndex>,
    bins_per_dim: usize,
    heatmap_genres: &[String],
    grid: usize,
    arrow_formulation: &str,
    min_count: u64,
) -> Result<ProjectionReport, AnalysisError> {
    let pooled: Vec<Vec<f64>> = sets
        .iter()
        .flat_map(|s| s.results.values().map(|p| grid_point(p, bins_per_dim).0))
        .collect();
    if pooled.len() < 2 {
        return Err(AnalysisError::NothingToAnalyse);
    }
    let pca = fit_pca(&PointCloud::new(pooled)?, 2)?;

    let mut genres = Vec::new();
    let mut arrows = Vec::new();
    for set in sets.iter().filter(|s| !s.results.is_empty()) {
        let mut points = BTreeMap::new();
        let mut raw = Vec::new();
        for (f, p) in &set.results {
            let g = grid_point(p, bins_per_dim).0;
            points.insert(f.clone(), xy(pca.project(&g)?));
            raw.push(g);
        }
        let extraction_centroid = xy(pca.project(&centroid(&PointCloud::new(raw)?))?);
        let ground_truth_centroid = match index.map(|ix| genre_centroid(ix, &set.genre, min_count)) {
            Some(Ok(c)) => Some(xy(pca.project(c.point.coords())?)),
            Some(Err(DatasetError::GenreAbsent(_))) | None => None,
            Some(Err(e)) => return Err(e.into()),
        };
        if let Some(&to) = points.get(arrow_formulation) {
            arrows.push(Arrow {
                genre: set.genre.clone(),
                from: extraction_centroid,
                to,
            });
        }
        let hull = hull_2d(&points.values().copied().collect::<Vec<_>>());
        genres.push(GenreProjection {
            genre: set.genre.clone(),
            points,
            hull,
            extraction_centroid,
            ground_truth_centroid,
        });
    }

    let mut heatmaps = Vec::new();
    if let Some(ix) = index {
        for genre in heatmap_genres {
            heatmaps.push(heatmap_grid(ix, genre, &pca, grid)?);
        }
    }
    Ok(ProjectionReport {
        schema_version: SCHEMA_VERSION,
        explained_variance_ratio: pca.explained_variance_ratio(),
        pca,
        genres,
        heatmaps,
        arrow_formulation: arrow_formulation.to_string(),
        arrows,
    })
}

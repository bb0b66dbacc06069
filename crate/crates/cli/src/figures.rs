//! Plot-ready data for every figure, decoupled from any renderer.
//!
//! Emitters only select and reshape numbers already present in the
//! analysis artifacts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use vecont_core::analysis::Arrow;
use vecont_core::stats::ComparisonResult;

use crate::artifact::{self, SCHEMA_VERSION};
use crate::stages::Analyses;

/// Labels kept per genre in distribution bars; the rest is summed as "other".
pub const LABEL_BUDGET: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRef {
    pub artifact: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axes {
    pub x: String,
    pub y: String,
    pub log_y: bool,
}

/// Baseline drawn as a horizontal reference line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub mean: f64,
    pub median: f64,
}

impl Reference {
    fn baseline_of(c: &ComparisonResult) -> Option<Self> {
        Some(Self {
            mean: c.baseline_mean?,
            median: c.baseline_median?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
    /// Set on log-scale figures: `true` marks an exact zero, which has no
    /// log and must be drawn at the floor annotation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullSeries {
    pub genre: String,
    pub points: Vec<[f64; 2]>,
    pub hull: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidPoint {
    pub genre: String,
    pub extraction: [f64; 2],
    pub ground_truth: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelBars {
    pub genre: String,
    pub songs_sampled: usize,
    pub empty_locations: usize,
    pub raw: Vec<(String, u64)>,
    pub raw_other: u64,
    pub grouped: Vec<(String, u64)>,
    pub grouped_other: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapPanel {
    pub genre: String,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    /// `cells[row][col]`, row 0 at the lowest y; `null` where no bin projects.
    pub cells: Vec<Vec<Option<f64>>>,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Payload {
    ScatterHulls {
        explained_variance_ratio: Vec<f64>,
        genres: Vec<HullSeries>,
    },
    CentroidScatter {
        genres: Vec<CentroidPoint>,
    },
    BarPerGenre {
        genres: Vec<String>,
        series: Vec<Series>,
        /// Suggested position for zero markers on log axes.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        log_floor: Option<f64>,
    },
    DistributionBars {
        label_budget: usize,
        genres: Vec<LabelBars>,
    },
    HeatmapOverlay {
        panels: Vec<HeatmapPanel>,
    },
    ShiftArrows {
        formulation: String,
        arrows: Vec<Arrow>,
    },
    SimilarityBars {
        formulations: Vec<String>,
        /// `null` where too few genres took part.
        values: Vec<Option<f64>>,
        reference: Option<Reference>,
        comparison: ComparisonResult,
    },
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::ScatterHulls { .. } => "scatter_hulls",
            Self::CentroidScatter { .. } => "centroid_scatter",
            Self::BarPerGenre { .. } => "bar_per_genre",
            Self::DistributionBars { .. } => "distribution_bars",
            Self::HeatmapOverlay { .. } => "heatmap_overlay",
            Self::ShiftArrows { .. } => "shift_arrows",
            Self::SimilarityBars { .. } => "similarity_bars",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureData {
    pub schema_version: u32,
    pub figure: String,
    pub title: String,
    pub config_hash: String,
    pub sources: Vec<SourceRef>,
    pub axes: Axes,
    #[serde(flatten)]
    pub payload: Payload,
}

impl FigureData {
    /// Shape checks between the payload and its kind.
    pub fn check(&self) -> Result<(), String> {
        let fail = |m: String| Err(format!("{}: {m}", self.figure));
        match &self.payload {
            Payload::BarPerGenre { genres, series, log_floor } => {
                for s in series {
                    if s.values.len() != genres.len() {
                        return fail(format!("series `{}` has {} values for {} genres", s.name, s.values.len(), genres.len()));
                    }
                    if self.axes.log_y {
                        let Some(zero) = &s.zero else {
                            return fail(format!("log-scale series `{}` has no zero flags", s.name));
                        };
                        if zero.len() != s.values.len() {
                            return fail(format!("series `{}` zero flags misaligned", s.name));
                        }
                        for (v, z) in s.values.iter().zip(zero) {
                            if !(*v > 0.0 || (*z && *v == 0.0)) {
                                return fail(format!("series `{}` value {v} is not log-ready", s.name));
                            }
                        }
                        if log_floor.is_none_or(|f| f <= 0.0) {
                            return fail("log-scale figure needs a positive floor".into());
                        }
                    }
                }
            }
            Payload::HeatmapOverlay { panels } => {
                for p in panels {
                    let n = p.cells.len();
                    if n == 0 || p.cells.iter().any(|row| row.len() != n) {
                        return fail(format!("heatmap `{}` is not square", p.genre));
                    }
                }
            }
            Payload::SimilarityBars { formulations, values, .. } => {
                if formulations.len() != values.len() {
                    return fail("formulations and values differ in length".into());
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn file_name(&self) -> String {
        format!("{}.json", self.figure)
    }
}

struct Builder<'a> {
    config_hash: &'a str,
}

impl Builder<'_> {
    fn figure(&self, figure: &str, title: &str, sources: &[(&str, &str)], axes: (&str, &str, bool), payload: Payload) -> FigureData {
        FigureData {
            schema_version: SCHEMA_VERSION,
            figure: figure.into(),
            title: title.into(),
            config_hash: self.config_hash.into(),
            sources: sources
                .iter()
                .map(|(a, s)| SourceRef {
                    artifact: a.to_string(),
                    sha256: s.to_string(),
                })
                .collect(),
            axes: Axes {
                x: axes.0.into(),
                y: axes.1.into(),
                log_y: axes.2,
            },
            payload,
        }
    }
}

fn top_labels(counts: &BTreeMap<String, u64>) -> (Vec<(String, u64)>, u64) {
    let mut sorted: Vec<(String, u64)> = counts.iter().map(|(k, v)| (k.clone(), *v)).collect();
    sorted.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let other = sorted.iter().skip(LABEL_BUDGET).map(|(_, c)| c).sum();
    sorted.truncate(LABEL_BUDGET);
    (sorted, other)
}

fn log_series(name: &str, values: Vec<f64>, reference: Option<Reference>) -> Series {
    Series {
        name: name.into(),
        zero: Some(values.iter().map(|&v| v == 0.0).collect()),
        values,
        reference,
    }
}

/// Smallest positive value across the series and references, one decade down.
fn log_floor(series: &[Series]) -> f64 {
    series
        .iter()
        .flat_map(|s| s.values.iter().copied().chain(s.reference.iter().flat_map(|r| [r.mean, r.median])))
        .filter(|v| *v > 0.0)
        .fold(f64::INFINITY, f64::min)
        .min(1.0)
        / 10.0
}

/// One [`FigureData`] per figure, in figure order.
pub fn build_all(config_hash: &str, heatmap_genres: &[String], a: &Analyses) -> Vec<FigureData> {
    let b = Builder { config_hash };
    let (ex, ex_sha) = (&a.extractions.0, a.extractions.1.as_str());
    let (cons, cons_sha) = (&a.consistency.0, a.consistency.1.as_str());
    let (acc, acc_sha) = (&a.accuracy.0, a.accuracy.1.as_str());
    let (dist, dist_sha) = (&a.distribution.0, a.distribution.1.as_str());
    let (shift, shift_sha) = (&a.shift.0, a.shift.1.as_str());
    let (proj, proj_sha) = (&a.projection.0, a.projection.1.as_str());
    let src_ex = (artifact::EXTRACTIONS.0, ex_sha);
    let src_cons = (artifact::CONSISTENCY.0, cons_sha);
    let src_proj = (artifact::PROJECTION.0, proj_sha);
    let mut out = Vec::new();

    out.push(b.figure(
        "fig01_scatter_hulls",
        "Extracted genre locations across formulations, PCA projection",
        &[src_proj],
        ("PC1", "PC2", false),
        Payload::ScatterHulls {
            explained_variance_ratio: proj.explained_variance_ratio.clone(),
            genres: proj
                .genres
                .iter()
                .map(|g| HullSeries {
                    genre: g.genre.clone(),
                    points: g.points.values().copied().collect(),
                    hull: g.hull.clone(),
                })
                .collect(),
        },
    ));
    out.push(b.figure(
        "fig02_centroids",
        "Genre centroids of extracted locations, PCA projection",
        &[src_proj],
        ("PC1", "PC2", false),
        Payload::CentroidScatter {
            genres: proj
                .genres
                .iter()
                .map(|g| CentroidPoint {
                    genre: g.genre.clone(),
                    extraction: g.extraction_centroid,
                    ground_truth: g.ground_truth_centroid,
                })
                .collect(),
        },
    ));

    let all_genres: Vec<String> = ex.sets.iter().map(|s| s.genre.clone()).collect();
    let counts = |f: &dyn Fn(&vecont_core::extraction::ExtractionSet) -> usize| ex.sets.iter().map(|s| f(s) as f64).collect::<Vec<_>>();
    out.push(b.figure(
        "fig03_counts",
        "Total and unique successful locations per genre",
        &[src_ex],
        ("genre", "locations", false),
        Payload::BarPerGenre {
            genres: all_genres,
            series: vec![
                Series {
                    name: "successful".into(),
                    values: counts(&|s| s.results.len()),
                    zero: None,
                    reference: None,
                },
                Series {
                    name: "unique".into(),
                    values: counts(&|s| s.results.values().collect::<std::collections::BTreeSet<_>>().len()),
                    zero: None,
                    reference: None,
                },
            ],
            log_floor: None,
        },
    ));

    let genres: Vec<String> = cons.genres.iter().map(|g| g.genre.clone()).collect();
    let metric = |name: &str| -> (Vec<f64>, Option<Reference>) {
        (
            cons.genres.iter().map(|g| g.metrics.get(name).unwrap_or(f64::NAN)).collect(),
            cons.comparisons.get(name).and_then(Reference::baseline_of),
        )
    };
    for (figure, title, name, y) in [
        ("fig04_centroid_distance", "Mean distance to the genre centroid", "mean_centroid_distance", "distance"),
        ("fig05_pairwise_distance", "Mean pairwise distance between formulations", "mean_pairwise_distance", "distance"),
        ("fig06_affine_dimension", "Dimension of the affine hull of each genre's locations", "affine_dim", "dimension"),
    ] {
        let (values, reference) = metric(name);
        out.push(b.figure(
            figure,
            title,
            &[src_cons],
            ("genre", y, false),
            Payload::BarPerGenre {
                genres: genres.clone(),
                series: vec![Series {
                    name: name.into(),
                    values,
                    zero: None,
                    reference,
                }],
                log_floor: None,
            },
        ));
    }
    for (figure, title, name) in [
        ("fig07_volume_mean_radius", "Ball volume at the mean centroid distance, fraction of the unit cube", "volume_fraction_mean_radius"),
        ("fig08_volume_max_radius", "Ball volume at the max centroid distance, fraction of the unit cube", "volume_fraction_max_radius"),
    ] {
        let (values, reference) = metric(name);
        let series = vec![log_series(name, values, reference)];
        let floor = log_floor(&series);
        out.push(b.figure(
            figure,
            title,
            &[src_cons],
            ("genre", "volume fraction", true),
            Payload::BarPerGenre {
                genres: genres.clone(),
                series,
                log_floor: Some(floor),
            },
        ));
    }

    out.push(b.figure(
        "fig09_distributions",
        "Corpus genre labels at the extracted locations",
        &[(artifact::DISTRIBUTION.0, dist_sha)],
        ("label", "songs", false),
        Payload::DistributionBars {
            label_budget: LABEL_BUDGET,
            genres: dist
                .genres
                .iter()
                .filter(|g| heatmap_genres.contains(&g.genre))
                .map(|g| {
                    let (raw, raw_other) = top_labels(&g.raw);
                    let (grouped, grouped_other) = top_labels(&g.grouped);
                    LabelBars {
                        genre: g.genre.clone(),
                        songs_sampled: g.songs_sampled,
                        empty_locations: g.empty_locations,
                        raw,
                        raw_other,
                        grouped,
                        grouped_other,
                    }
                })
                .collect(),
        },
    ));

    let points_of = |genre: &str| -> Vec<[f64; 2]> {
        proj.genres
            .iter()
            .find(|g| g.genre == genre)
            .map(|g| g.points.values().copied().collect())
            .unwrap_or_default()
    };
    out.push(b.figure(
        "fig10_heatmaps",
        "Mean genre count per projected bin with extracted locations",
        &[src_proj],
        ("PC1", "PC2", false),
        Payload::HeatmapOverlay {
            panels: proj
                .heatmaps
                .iter()
                .map(|h| HeatmapPanel {
                    genre: h.genre.clone(),
                    x_range: h.x_range,
                    y_range: h.y_range,
                    cells: h.cells.clone(),
                    points: points_of(&h.genre),
                })
                .collect(),
        },
    ));

    let acc_genres: Vec<String> = acc.genres.iter().map(|g| g.genre.clone()).collect();
    let acc_series = |name: &str, values: Vec<f64>| Series {
        name: name.into(),
        values,
        zero: None,
        reference: acc.comparisons.get(name).and_then(Reference::baseline_of),
    };
    out.push(b.figure(
        "fig10b_accuracy",
        "Extraction centroid against ground-truth centroid per genre",
        &[(artifact::ACCURACY.0, acc_sha)],
        ("genre", "score", false),
        Payload::BarPerGenre {
            genres: acc_genres,
            series: vec![
                acc_series("euclidean", acc.genres.iter().map(|g| g.euclidean).collect()),
                acc_series("cosine_raw", acc.genres.iter().map(|g| g.cosine_raw).collect()),
                acc_series("cosine_shifted", acc.genres.iter().map(|g| g.cosine_shifted.unwrap_or(f64::NAN)).collect()),
            ],
            log_floor: None,
        },
    ));

    out.push(b.figure(
        "fig11a_shift_arrows",
        "Genre centroids and one formulation's locations",
        &[src_proj],
        ("PC1", "PC2", false),
        Payload::ShiftArrows {
            formulation: proj.arrow_formulation.clone(),
            arrows: proj.arrows.clone(),
        },
    ));
    let formulations: Vec<String> = shift.formulations.iter().map(|f| f.formulation.clone()).collect();
    for (figure, title, values, comparison) in [
        (
            "fig11b_global_similarity",
            "Mean cosine between genres' shifts for the same formulation",
            shift.formulations.iter().map(|f| f.global_mean_cosine).collect::<Vec<_>>(),
            &shift.global,
        ),
        (
            "fig11c_knn_similarity",
            "Mean cosine of formulation shifts among nearest-neighbour genres",
            shift.formulations.iter().map(|f| f.knn_mean_cosine).collect(),
            &shift.knn,
        ),
    ] {
        out.push(b.figure(
            figure,
            title,
            &[(artifact::SHIFT.0, shift_sha)],
            ("formulation", "cosine", false),
            Payload::SimilarityBars {
                formulations: formulations.clone(),
                values,
                reference: Reference::baseline_of(comparison),
                comparison: comparison.clone(),
            },
        ));
    }
    out
}

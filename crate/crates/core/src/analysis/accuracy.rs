use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AnalysisError, Excluded, SCHEMA_VERSION};
use crate::dataset::{genre_centroid, BinnedCorpus, DatasetError, GroundTruthIndex};
use crate::extraction::ExtractionSet;
use crate::geometry::{centroid, cosine_similarity, euclidean, GeometryError, PointCloud};
use crate::ontology::grid_point;
use crate::rng::{stream_rng, ACCURACY_BASELINE, SAMPLING};
use crate::stats::{compare, ComparisonResult};

pub const ACCURACY_METRICS: [&str; 3] = ["euclidean", "cosine_raw", "cosine_shifted"];

/// Origin shift that centers the unit cube.
const CUBE_CENTER: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenreAccuracy {
    pub genre: String,
    pub extraction_centroid: Vec<f64>,
    pub ground_truth_centroid: Vec<f64>,
    pub ground_truth_weight: u64,
    pub euclidean: f64,
    pub cosine_raw: f64,
    /// `None` when either centroid sits exactly at the cube center.
    pub cosine_shifted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub schema_version: u32,
    pub min_count: u64,
    pub baseline_pairs: usize,
    pub seed: u64,
    pub genres: Vec<GenreAccuracy>,
    pub excluded: Vec<Excluded>,
    /// Baseline pairs skipped because a shifted vector vanished.
    pub baseline_zero_vectors: usize,
    pub comparisons: BTreeMap<String, ComparisonResult>,
}

struct Measures {
    euclidean: f64,
    cosine_raw: f64,
    cosine_shifted: Option<f64>,
}

fn measures(a: &[f64], b: &[f64]) -> Result<Measures, GeometryError> {
    let shifted = match cosine_similarity(a, b, Some(CUBE_CENTER)) {
        Ok(c) => Some(c),
        Err(GeometryError::ZeroVector) => None,
        Err(e) => return Err(e),
    };
    Ok(Measures {
        euclidean: euclidean(a, b),
        cosine_raw: cosine_similarity(a, b, None)?,
        cosine_shifted: shifted,
    })
}

/// Extraction centroid of each genre against its count-weighted ground
/// truth centroid, with a baseline of randomly mismatched pairs.
pub fn accuracy_suite(
    sets: &[ExtractionSet],
    index: &GroundTruthIndex,
    baseline_pairs: usize,
    min_count: u64,
    seed: u64,
) -> Result<AccuracyReport, AnalysisError> {
    let mut excluded = Vec::new();
    let mut genres = Vec::new();
    for set in sets {
        if set.results.is_empty() {
            excluded.push(Excluded {
                genre: set.genre.clone(),
                reason: "no successful positions".into(),
            });
            continue;
        }
        let gt = match genre_centroid(index, &set.genre, min_count) {
            Ok(c) => c,
            Err(DatasetError::GenreAbsent(_)) => {
                excluded.push(Excluded {
                    genre: set.genre.clone(),
                    reason: "absent from the ground-truth index".into(),
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let cloud = PointCloud::new(
            set.results
                .values()
                .map(|p| grid_point(p, index.bins_per_dim).0)
                .collect(),
        )?;
        let ext = centroid(&cloud);
        let m = measures(&ext, &gt.point.0)?;
        genres.push(GenreAccuracy {
            genre: set.genre.clone(),
            extraction_centroid: ext,
            ground_truth_centroid: gt.point.0,
            ground_truth_weight: gt.weight_total,
            euclidean: m.euclidean,
            cosine_raw: m.cosine_raw,
            cosine_shifted: m.cosine_shifted,
        });
    }

    let mut base = (Vec::new(), Vec::new(), Vec::new());
    let mut baseline_zero_vectors = 0;
    if genres.len() >= 2 {
        let mut rng = stream_rng(seed, ACCURACY_BASELINE, 0);
        let g = genres.len();
        for _ in 0..baseline_pairs {
            let i = rng.random_range(0..g);
            let j = (i + rng.random_range(1..g)) % g;
            let m = measures(&genres[i].extraction_centroid, &genres[j].ground_truth_centroid)?;
            base.0.push(m.euclidean);
            base.1.push(m.cosine_raw);
            match m.cosine_shifted {
                Some(c) => base.2.push(c),
                None => baseline_zero_vectors += 1,
            }
        }
    }
    let observed = (
        genres.iter().map(|g| g.euclidean).collect::<Vec<_>>(),
        genres.iter().map(|g| g.cosine_raw).collect::<Vec<_>>(),
        genres.iter().filter_map(|g| g.cosine_shifted).collect::<Vec<_>>(),
    );
    let comparisons = BTreeMap::from([
        ("euclidean".to_string(), compare(&observed.0, &base.0)),
        ("cosine_raw".to_string(), compare(&observed.1, &base.1)),
        ("cosine_shifted".to_string(), compare(&observed.2, &base.2)),
    ]);
    Ok(AccuracyReport {
        schema_version: SCHEMA_VERSION,
        min_count,
        baseline_pairs,
        seed,
        genres,
        excluded,
        baseline_zero_vectors,
        comparisons,
    })
}

/// Lowercased word tokens of a genre label, each listed once.
pub fn genre_tokens(label: &str) -> BTreeSet<String> {
    label
        .to_lowercase()
        .split(|c: char| c.is_whitespace() || c == '-')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenreDistribution {
    pub genre: String,
    pub locations: usize,
    pub empty_locations: usize,
    pub songs_sampled: usize,
    pub raw: BTreeMap<String, u64>,
    pub grouped: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub schema_version: u32,
    pub cap: usize,
    pub seed: u64,
    pub genres: Vec<GenreDistribution>,
}

/// Samples up to `cap` songs at every extracted location of each genre,
/// pools them per genre and tallies their labels and label tokens.
pub fn distribution_at_locations(
    sets: &[ExtractionSet],
    corpus: &BinnedCorpus,
    cap: usize,
    seed: u64,
) -> Result<DistributionReport, AnalysisError> {
    let genres = sets
        .par_iter()
        .map(|set| {
            let mut out = GenreDistribution {
                genre: set.genre.clone(),
                locations: set.results.len(),
                empty_locations: 0,
                songs_sampled: 0,
                raw: BTreeMap::new(),
                grouped: BTreeMap::new(),
            };
            let stream = format!("{SAMPLING}:{}", set.genre);
            for (k, position) in set.results.values().enumerate() {
                let mut rng = stream_rng(seed, &stream, k as u64);
                let sample = corpus.sample_songs(position, cap, &mut rng)?;
                if sample.empty_bin {
                    out.empty_locations += 1;
                }
                out.songs_sampled += sample.songs.len();
                for &i in &sample.songs {
                    for label in &corpus.record(i).artist_genres {
                        *out.raw.entry(label.clone()).or_default() += 1;
                        for token in genre_tokens(label) {
                            *out.grouped.entry(token).or_default() += 1;
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_, AnalysisError>>()?;
    Ok(DistributionReport {
        schema_version: SCHEMA_VERSION,
        cap,
        seed,
        genres,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_split_on_spaces_and_hyphens() {
        let t: Vec<String> = genre_tokens("Indie-Rock  revival").into_iter().collect();
        assert_eq!(t, vec!["indie", "revival", "rock"]);
        assert_eq!(genre_tokens("rock rock").len(), 1);
    }

    #[test]
    fn centered_points_have_no_shifted_cosine() {
        let m = measures(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert!(m.cosine_shifted.is_none());
        let same = measures(&[0.25, 0.75], &[0.25, 0.75]).unwrap();
        assert_eq!(same.euclidean, 0.0);
        assert!((same.cosine_raw - 1.0).abs() < 1e-15);
        assert!((same.cosine_shifted.unwrap() - 1.0).abs() < 1e-15);
    }
}

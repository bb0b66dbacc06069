//! Per-bin genre counters built from a labelled corpus.

use std::collections::{BTreeMap, HashMap};

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::SongRecord;
use super::DatasetError;
use crate::geometry::PcaModel;
use crate::ontology::{grid_point, DiscretePosition, NormalizedPoint, Ontology};

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinEntry {
    pub songs: u64,
    pub genres: BTreeMap<String, u64>,
}

impl BinEntry {
    fn merge(&mut self, other: BinEntry) {
        self.songs += other.songs;
        for (g, c) in other.genres {
            *self.genres.entry(g).or_default() += c;
        }
    }

    pub fn count(&self, genre: &str) -> u64 {
        self.genres.get(genre).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthIndex {
    pub bins_per_dim: usize,
    pub dims: usize,
    pub bins: BTreeMap<DiscretePosition, BinEntry>,
    pub total_songs: u64,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    schema_version: u32,
    bins_per_dim: usize,
    dims: usize,
    total_songs: u64,
    entries: Vec<IndexFileEntry>,
}

#[derive(Serialize, Deserialize)]
struct IndexFileEntry {
    position: DiscretePosition,
    songs: u64,
    genres: BTreeMap<String, u64>,
}

impl GroundTruthIndex {
    pub fn occupied(&self) -> usize {
        self.bins.len()
    }

    pub fn contains_genre(&self, genre: &str) -> bool {
        self.bins.values().any(|b| b.count(genre) > 0)
    }

    /// Sorted list of every genre label in the index.
    pub fn genres(&self) -> Vec<String> {
        let mut all: Vec<String> = self
            .bins
            .values()
            .flat_map(|b| b.genres.keys().cloned())
            .collect();
        all.sort();
        all.dedup();
        all
    }

    pub fn center(&self, p: &DiscretePosition) -> NormalizedPoint {
        grid_point(p, self.bins_per_dim)
    }

    pub fn to_json(&self) -> String {
        let file = IndexFile {
            schema_version: SCHEMA_VERSION,
            bins_per_dim: self.bins_per_dim,
            dims: self.dims,
            total_songs: self.total_songs,
            entries: self
                .bins
                .iter()
                .map(|(p, e)| IndexFileEntry {
                    position: p.clone(),
                    songs: e.songs,
                    genres: e.genres.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("index serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let file: IndexFile = serde_json::from_str(text).map_err(|e| DatasetError::IndexFile(e.to_string()))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(DatasetError::IndexFile(format!(
                "unsupported schema_version {}",
                file.schema_version
            )));
        }
        let mut bins = BTreeMap::new();
        for e in file.entries {
            if e.position.len() != file.dims || e.position.indices().iter().any(|&i| i as usize >= file.bins_per_dim) {
                return Err(DatasetError::IndexFile(format!("position {} outside the grid", e.position)));
            }
            bins.insert(e.position, BinEntry { songs: e.songs, genres: e.genres });
        }
        Ok(Self {
            bins_per_dim: file.bins_per_dim,
            dims: file.dims,
            bins,
            total_songs: file.total_songs,
        })
    }
}

/// Bins every song and adds its full genre set to that bin's counters.
///
/// Shards are counted in parallel and merged; the result does not depend on
/// corpus order.
pub fn build_index(ontology: &Ontology, corpus: &[SongRecord]) -> Result<GroundTruthIndex, DatasetError> {
    let bins = corpus
        .par_chunks(4096)
        .map(|chunk| {
            let mut local: BTreeMap<DiscretePosition, BinEntry> = BTreeMap::new();
            for song in chunk {
                let pos = ontology.assign_bin(&song.features).map_err(|source| DatasetError::OutOfDomain {
                    song: song.id.clone(),
                    source,
                })?;
                let entry = local.entry(pos).or_default();
                entry.songs += 1;
                for g in &song.artist_genres {
                    *entry.genres.entry(g.clone()).or_default() += 1;
                }
            }
            Ok(local)
        })
        .try_reduce(BTreeMap::new, |mut a, b| {
            for (p, e) in b {
                a.entry(p).or_default().merge(e);
            }
            Ok(a)
        })?;
    Ok(GroundTruthIndex {
        bins_per_dim: ontology.bins_per_dim(),
        dims: ontology.dim_count(),
        bins,
        total_songs: corpus.len() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenreCentroid {
    pub genre: String,
    pub point: NormalizedPoint,
    pub weight_total: u64,
    pub bins_used: usize,
}

/// Count-weighted mean of the centers of every bin holding `genre`.
/// Bins with fewer than `min_count` occurrences are ignored.
pub fn genre_centroid(index: &GroundTruthIndex, genre: &str, min_count: u64) -> Result<GenreCentroid, DatasetError> {
    let hits: Vec<(NormalizedPoint, u64)> = index
        .bins
        .iter()
        .map(|(p, e)| (p, e.count(genre)))
        .filter(|&(_, c)| c > 0 && c >= min_count)
        .map(|(p, c)| (index.center(p), c))
        .collect();
    let Some((origin, _)) = hits.first() else {
        return Err(DatasetError::GenreAbsent(genre.to_string()));
    };
    let total: u64 = hits.iter().map(|(_, c)| c).sum();
    let mut acc = vec![0.0; index.dims];
    for (p, c) in &hits {
        for ((a, x), o) in acc.iter_mut().zip(p.coords()).zip(origin.coords()) {
            *a += *c as f64 * (x - o);
        }
    }
    let point = origin
        .coords()
        .iter()
        .zip(acc)
        .map(|(o, a)| o + a / total as f64)
        .collect();
    Ok(GenreCentroid {
        genre: genre.to_string(),
        point: NormalizedPoint(point),
        weight_total: total,
        bins_used: hits.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub genre: String,
    pub grid: usize,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    /// `cells[row][col]`, row 0 at the bottom (lowest y). `None` marks a
    /// cell no occupied bin projects into.
    pub cells: Vec<Vec<Option<f64>>>,
}

/// Projects every occupied bin center onto the first two principal axes
/// and averages the genre's per-bin count inside each grid cell.
pub fn heatmap_grid(
    index: &GroundTruthIndex,
    genre: &str,
    projector: &PcaModel,
    grid: usize,
) -> Result<HeatmapGrid, DatasetError> {
    if projector.components.len() < 2 {
        return Err(DatasetError::UnfittedProjector(projector.components.len()));
    }
    if grid == 0 {
        return Err(DatasetError::ZeroGrid);
    }
    let projected: Vec<([f64; 2], u64)> = index
        .bins
        .iter()
        .map(|(p, e)| {
            let xy = projector
                .project(index.center(p).coords())
                .map_err(|_| DatasetError::UnfittedProjector(projector.components.len()))?;
            Ok(([xy[0], xy[1]], e.count(genre)))
        })
        .collect::<Result<_, DatasetError>>()?;
    let range = |k: usize| {
        let (lo, hi) = projected
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (xy, _)| (lo.min(xy[k]), hi.max(xy[k])));
        if projected.is_empty() {
            [-0.5, 0.5]
        } else if hi > lo {
            [lo, hi]
        } else {
            [lo - 0.5, hi + 0.5]
        }
    };
    let (xr, yr) = (range(0), range(1));
    let cell = |v: f64, r: [f64; 2]| (((v - r[0]) / (r[1] - r[0]) * grid as f64) as usize).min(grid - 1);
    let mut sums = vec![vec![(0u64, 0u64); grid]; grid];
    for (xy, count) in &projected {
        let slot = &mut sums[cell(xy[1], yr)][cell(xy[0], xr)];
        slot.0 += count;
        slot.1 += 1;
    }
    let cells = sums
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|(s, n)| (n > 0).then(|| s as f64 / n as f64))
                .collect()
        })
        .collect();
    Ok(HeatmapGrid {
        genre: genre.to_string(),
        grid,
        x_range: xr,
        y_range: yr,
        cells,
    })
}

/// Corpus grouped by bin, for drawing songs at a given position.
#[derive(Debug, Clone)]
pub struct BinnedCorpus {
    records: Vec<SongRecord>,
    members: HashMap<DiscretePosition, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SongSample {
    /// Indices into the corpus, ascending.
    pub songs: Vec<usize>,
    pub empty_bin: bool,
}

impl BinnedCorpus {
    pub fn new(ontology: &Ontology, records: Vec<SongRecord>) -> Result<Self, DatasetError> {
        let features: Vec<_> = records.iter().map(|r| r.features.clone()).collect();
        let positions = ontology.assign_all(&features).map_err(|source| {
            let song = records
                .iter()
                .find(|r| ontology.assign_bin(&r.features).is_err())
                .map(|r| r.id.clone())
                .unwrap_or_default();
            DatasetError::OutOfDomain { song, source }
        })?;
        let mut members: HashMap<DiscretePosition, Vec<usize>> = HashMap::new();
        for (i, p) in positions.into_iter().enumerate() {
            members.entry(p).or_default().push(i);
        }
        Ok(Self { records, members })
    }

    pub fn record(&self, i: usize) -> &SongRecord {
        &self.records[i]
    }

    pub fn records(&self) -> &[SongRecord] {
        &self.records
    }

    pub fn population(&self, p: &DiscretePosition) -> usize {
        self.members.get(p).map_or(0, Vec::len)
    }

    /// Uniform draw without replacement of `min(cap, population)` songs.
    pub fn sample_songs<R: Rng + ?Sized>(
        &self,
        p: &DiscretePosition,
        cap: usize,
        rng: &mut R,
    ) -> Result<SongSample, DatasetError> {
        if cap == 0 {
            return Err(DatasetError::ZeroCap);
        }
        let Some(members) = self.members.get(p) else {
            return Ok(SongSample {
                songs: Vec::new(),
                empty_bin: true,
            });
        };
        let mut songs: Vec<usize> = if members.len() <= cap {
            members.clone()
        } else {
            sample(rng, members.len(), cap).into_iter().map(|k| members[k]).collect()
        };
        songs.sort_unstable();
        Ok(SongSample { songs, empty_bin: false })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::record::Artist;
    use crate::ontology::{DimensionSpec, FeatureVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ontology() -> Ontology {
        let dim = |name: &str| DimensionSpec {
            name: name.into(),
            domain_min: 0.0,
            domain_max: 1.0,
            edges: vec![0.0, 0.5, 1.0],
        };
        Ontology::new(vec![dim("x"), dim("y")], 2).unwrap()
    }

    fn song(id: &str, x: f64, y: f64, genres: &[&str]) -> SongRecord {
        SongRecord::new(
            id,
            "",
            vec![Artist {
                name: "a".into(),
                genres: genres.iter().map(|g| g.to_string()).collect(),
            }],
            FeatureVector(vec![x, y]),
        )
    }

    fn pos(i: u16, j: u16) -> DiscretePosition {
        DiscretePosition(vec![i, j])
    }

    #[test]
    fn counts_accumulate_per_bin() {
        let idx = build_index(&ontology(), &[song("1", 0.1, 0.1, &["jazz", "soul"])]).unwrap();
        assert_eq!(idx.bins[&pos(0, 0)].count("jazz"), 1);
        assert_eq!(idx.bins[&pos(0, 0)].count("soul"), 1);
        let idx = build_index(
            &ontology(),
            &[song("1", 0.1, 0.1, &["jazz"]), song("2", 0.2, 0.3, &["jazz", "soul"])],
        )
        .unwrap();
        assert_eq!(idx.bins[&pos(0, 0)].count("jazz"), 2);
        assert_eq!(idx.bins[&pos(0, 0)].songs, 2);
    }

    #[test]
    fn out_of_domain_names_the_song() {
        match build_index(&ontology(), &[song("bad", 1.5, 0.1, &[])]) {
            Err(DatasetError::OutOfDomain { song, .. }) => assert_eq!(song, "bad"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weighted_centroids() {
        let o = ontology();
        let one = build_index(&o, &[song("1", 0.9, 0.1, &["a"])]).unwrap();
        assert_eq!(genre_centroid(&one, "a", 0).unwrap().point.0, vec![0.75, 0.25]);
        let songs = [
            song("1", 0.1, 0.1, &["a"]),
            song("2", 0.1, 0.1, &["a"]),
            song("3", 0.1, 0.1, &["a"]),
            song("4", 0.9, 0.9, &["a", "b"]),
        ];
        let idx = build_index(&o, &songs).unwrap();
        let c = genre_centroid(&idx, "a", 0).unwrap();
        assert_eq!(c.weight_total, 4);
        // 0.75 * 0.25 + 0.25 * 0.75
        assert!((c.point.0[0] - 0.375).abs() < 1e-15);
        let thresholded = genre_centroid(&idx, "a", 2).unwrap();
        assert_eq!(thresholded.point.0, vec![0.25, 0.25]);
        assert!(matches!(genre_centroid(&idx, "zzz", 0), Err(DatasetError::GenreAbsent(_))));
    }

    fn axis_projector() -> PcaModel {
        PcaModel {
            mean: vec![0.0, 0.0],
            components: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            explained_variance: vec![1.0, 1.0],
            total_variance: 2.0,
        }
    }

    #[test]
    fn heatmap_marks_empty_cells() {
        let idx = build_index(
            &ontology(),
            &[song("1", 0.1, 0.1, &["a"]), song("2", 0.9, 0.9, &["b"]), song("3", 0.9, 0.9, &["b"])],
        )
        .unwrap();
        let h = heatmap_grid(&idx, "b", &axis_projector(), 2).unwrap();
        assert_eq!(h.cells, vec![vec![Some(0.0), None], vec![None, Some(2.0)]]);
        let flat = PcaModel {
            components: vec![vec![1.0, 0.0]],
            ..axis_projector()
        };
        assert!(matches!(heatmap_grid(&idx, "b", &flat, 2), Err(DatasetError::UnfittedProjector(1))));
    }

    #[test]
    fn json_round_trip() {
        let idx = build_index(
            &ontology(),
            &[song("1", 0.1, 0.7, &["a", "b"]), song("2", 0.9, 0.9, &["b"])],
        )
        .unwrap();
        assert_eq!(GroundTruthIndex::from_json(&idx.to_json()).unwrap(), idx);
        let tampered = idx.to_json().replace("\"schema_version\":1", "\"schema_version\":9");
        assert!(GroundTruthIndex::from_json(&tampered).is_err());
    }

    #[test]
    fn sampling_respects_cap_and_seed() {
        let songs: Vec<SongRecord> = (0..100).map(|i| song(&i.to_string(), 0.1, 0.1, &["a"])).collect();
        let binned = BinnedCorpus::new(&ontology(), songs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = binned.sample_songs(&pos(0, 0), 50, &mut rng).unwrap();
        assert_eq!(s.songs.len(), 50);
        assert!(s.songs.windows(2).all(|w| w[0] < w[1]));
        let again = binned.sample_songs(&pos(0, 0), 50, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(s, again);
        let empty = binned.sample_songs(&pos(1, 1), 50, &mut rng).unwrap();
        assert!(empty.empty_bin && empty.songs.is_empty());
        assert_eq!(binned.sample_songs(&pos(0, 0), 200, &mut rng).unwrap().songs.len(), 100);
        assert!(matches!(binned.sample_songs(&pos(0, 0), 0, &mut rng), Err(DatasetError::ZeroCap)));
    }
}

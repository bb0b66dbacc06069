//! Seeded mixture-of-clusters corpus generator.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::{Artist, SongRecord};
use super::DatasetError;
use crate::ontology::{DimensionDomain, FeatureVector};
use crate::rng::{stream_rng, SYNTHESIS};

const ARTISTS_PER_CLUSTER: usize = 20;

/// One genre hotspot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub genre: String,
    /// Labels every artist of the cluster carries; defaults to `[genre]` when empty.
    #[serde(default)]
    pub labels: Vec<String>,
    /// Pool of extra labels an artist may pick up with probability `secondary_rate`.
    #[serde(default)]
    pub secondary: Vec<String>,
    /// Native units, one entry per dimension.
    pub mean: Vec<f64>,
    /// Per-dimension standard deviation in native units.
    pub spread: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub dimensions: Vec<DimensionDomain>,
    pub clusters: Vec<ClusterSpec>,
    pub total_count: usize,
    pub seed: u64,
    #[serde(default)]
    pub secondary_rate: f64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::InvalidSpec(m));
        let d = self.dimensions.len();
        if d == 0 {
            return bad("no dimensions".into());
        }
        if self.clusters.is_empty() {
            return bad("no clusters".into());
        }
        if !(0.0..=1.0).contains(&self.secondary_rate) {
            return bad(format!("secondary_rate {} outside [0, 1]", self.secondary_rate));
        }
        for c in &self.clusters {
            if !(c.weight.is_finite() && c.weight > 0.0) {
                return bad(format!("cluster `{}`: weight must be positive", c.genre));
            }
            if c.mean.len() != d || c.spread.len() != d {
                return bad(format!("cluster `{}`: mean and spread need {d} entries", c.genre));
            }
            for ((dom, &m), &s) in self.dimensions.iter().zip(&c.mean).zip(&c.spread) {
                if !(m >= dom.min && m <= dom.max) {
                    return bad(format!("cluster `{}`: mean {m} outside `{}` domain", c.genre, dom.name));
                }
                if !(s.is_finite() && s >= 0.0) {
                    return bad(format!("cluster `{}`: spread for `{}` must be >= 0", c.genre, dom.name));
                }
            }
        }
        Ok(())
    }

    /// Planted hotspots for the given genres over `dimensions`.
    ///
    /// Genres are grouped in families of five consecutive entries. Each
    /// family gets a center in the middle 70% of every domain; members sit
    /// within 12% of the domain width of it and borrow each other's labels
    /// as secondary genres.
    pub fn planted(dimensions: Vec<DimensionDomain>, genres: &[String], total_count: usize, seed: u64) -> Self {
        const FAMILY: usize = 5;
        let mut rng = stream_rng(seed, SYNTHESIS, u64::MAX);
        let mut clusters = Vec::with_capacity(genres.len());
        for family in genres.chunks(FAMILY) {
            let center: Vec<f64> = dimensions.iter().map(|_| rng.random_range(0.15..0.85)).collect();
            for genre in family {
                let mut mean = Vec::with_capacity(dimensions.len());
                let mut spread = Vec::with_capacity(dimensions.len());
                for (dom, &c) in dimensions.iter().zip(&center) {
                    let width = dom.max - dom.min;
                    let frac = (c + rng.random_range(-0.12..0.12)).clamp(0.0, 1.0);
                    mean.push(dom.min + frac * width);
                    spread.push(0.06 * width);
                }
                clusters.push(ClusterSpec {
                    genre: genre.clone(),
                    labels: vec![genre.clone()],
                    secondary: family.iter().filter(|g| *g != genre).cloned().collect(),
                    mean,
                    spread,
                    weight: 1.0,
                });
            }
        }
        Self {
            dimensions,
            clusters,
            total_count,
            seed,
            secondary_rate: 0.25,
        }
    }
}

/// Largest-remainder split of `total` by `weights`; ties go to the earlier entry.
pub fn apportion(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

pub fn synthesize(spec: &SynthSpec) -> Result<Vec<SongRecord>, DatasetError> {
    spec.validate()?;
    let weights: Vec<f64> = spec.clusters.iter().map(|c| c.weight).collect();
    let counts = apportion(&weights, spec.total_count);
    let per_cluster: Vec<Vec<SongRecord>> = spec
        .clusters
        .par_iter()
        .zip(counts)
        .enumerate()
        .map(|(ci, (cluster, count))| synthesize_cluster(spec, ci, cluster, count))
        .collect();
    Ok(per_cluster.into_iter().flatten().collect())
}

fn synthesize_cluster(spec: &SynthSpec, ci: usize, cluster: &ClusterSpec, count: usize) -> Vec<SongRecord> {
    let mut rng = stream_rng(spec.seed, SYNTHESIS, ci as u64);
    let base = if cluster.labels.is_empty() {
        vec![cluster.genre.clone()]
    } else {
        cluster.labels.clone()
    };
    let artists: Vec<Artist> = (0..ARTISTS_PER_CLUSTER)
        .map(|a| {
            let mut genres = base.clone();
            if rng.random::<f64>() < spec.secondary_rate {
                if let Some(extra) = cluster.secondary.choose(&mut rng) {
                    if !genres.contains(extra) {
                        genres.push(extra.clone());
                    }
                }
            }
            Artist {
                name: format!("syn-artist-{ci:03}-{a:02}"),
                genres,
            }
        })
        .collect();
    (0..count)
        .map(|k| {
            let features = spec
                .dimensions
                .iter()
                .zip(cluster.mean.iter().zip(&cluster.spread))
                .map(|(dom, (&m, &s))| {
                    let z: f64 = rng.sample(StandardNormal);
                    (m + s * z).clamp(dom.min, dom.max)
                })
                .collect();
            SongRecord::new(
                format!("syn-{ci:03}-{k:05}"),
                format!("{} #{k}", cluster.genre),
                vec![artists[k % ARTISTS_PER_CLUSTER].clone()],
                FeatureVector(features),
            )
        })
        .collect()
}

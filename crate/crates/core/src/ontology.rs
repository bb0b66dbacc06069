//! The discretized vector ontology: named dimensions, equal-frequency bin
//! edges and all binning / coordinate math.
//!
//! Bins are left-closed for the first range and right-closed elsewhere:
//! bin 0 is `[edges[0], edges[1]]`, bin `i > 0` is `(edges[i], edges[i+1]]`.
//! Geometry downstream works on the unit cube, where bin `i` maps to the
//! coordinate `(i + 0.5) / n`.

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OntologyError {
    #[error("ontology needs at least one dimension")]
    NoDimensions,
    #[error("duplicate dimension name `{0}`")]
    DuplicateDimension(String),
    #[error("bins per dimension must be at least 1")]
    ZeroBins,
    #[error("dimension `{name}`: {reason}")]
    InvalidDimension { name: String, reason: String },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("dimension `{name}` has {distinct} distinct values, fewer than the {bins} bins requested")]
    DegenerateDimension { name: String, distinct: usize, bins: usize },
    #[error("value {value} of dimension `{name}` lies outside [{min}, {max}]")]
    OutOfDomain { name: String, value: f64, min: f64, max: f64 },
    #[error("expected {expected} values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("bin index {index} of dimension {dim} is outside 0..{bins}")]
    IndexOutOfRange { dim: usize, index: usize, bins: usize },
    #[error("density threshold {0} is outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("no resolution up to {n_max} reaches density {threshold}")]
    NoFeasibleResolution { n_max: usize, threshold: f64 },
}

/// Name and native-unit bounds of one ontological dimension, before any
/// binning has been fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionDomain {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

impl DimensionDomain {
    pub fn new(name: impl Into<String>, min: f64, max: f64) -> Self {
        Self { name: name.into(), min, max }
    }

    /// The eight audio-feature dimensions, all in `[0, 1]` except tempo
    /// which is measured in BPM.
    pub fn audio_features() -> Vec<DimensionDomain> {
        let unit = |name: &str| DimensionDomain::new(name, 0.0, 1.0);
        vec![
            unit("danceability"),
            unit("energy"),
            unit("speechiness"),
            unit("acousticness"),
            unit("instrumentalness"),
            unit("liveness"),
            unit("valence"),
            DimensionDomain::new("tempo", 0.0, 250.0),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSpec {
    pub name: String,
    pub domain_min: f64,
    pub domain_max: f64,
    /// `n + 1` strictly increasing bin boundaries.
    pub edges: Vec<f64>,
}

impl DimensionSpec {
    fn validate(&self, bins: usize) -> Result<(), OntologyError> {
        let invalid = |reason: String| OntologyError::InvalidDimension {
            name: self.name.clone(),
            reason,
        };
        if !(self.domain_min < self.domain_max) {
            return Err(invalid(format!(
                "domain [{}, {}] is empty",
                self.domain_min, self.domain_max
            )));
        }
        if self.edges.len() != bins + 1 {
            return Err(invalid(format!(
                "expected {} edges, found {}",
                bins + 1,
                self.edges.len()
            )));
        }
        if self.edges[0] != self.domain_min || self.edges[bins] != self.domain_max {
            return Err(invalid("outer edges must equal the domain bounds".into()));
        }
        if self.edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("edges must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Bin index of `value`, assuming it is inside the domain.
    fn locate(&self, value: f64) -> usize {
        let bins = self.edges.len() - 1;
        self.edges[1..bins].partition_point(|&e| e < value)
    }
}

/// A collapsed edge that had to be nudged to keep edges strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeWarning {
    pub dimension: String,
    pub edge: usize,
    pub original: f64,
    pub widened: f64,
}

impl fmt::Display for EdgeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "dimension `{}`: edge {} collapsed at {} and was widened to {:e}",
            self.dimension, self.edge, self.original, self.widened
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ontology {
    dimensions: Vec<DimensionSpec>,
    bins_per_dim: usize,
}

impl Ontology {
    pub fn new(dimensions: Vec<DimensionSpec>, bins_per_dim: usize) -> Result<Self, OntologyError> {
        if dimensions.is_empty() {
            return Err(OntologyError::NoDimensions);
        }
        if bins_per_dim == 0 {
            return Err(OntologyError::ZeroBins);
        }
        let mut seen = HashSet::new();
        for dim in &dimensions {
            if !seen.insert(dim.name.as_str()) {
                return Err(OntologyError::DuplicateDimension(dim.name.clone()));
            }
            dim.validate(bins_per_dim)?;
        }
        Ok(Self { dimensions, bins_per_dim })
    }

    /// Builds an ontology from raw edges that may contain collapsed
    /// (non-increasing) boundaries. Collapsed edges are widened by the
    /// smallest representable step and reported.
    pub fn with_widened_edges(
        domains: &[DimensionDomain],
        raw_edges: Vec<Vec<f64>>,
    ) -> Result<(Self, Vec<EdgeWarning>), OntologyError> {
        if domains.len() != raw_edges.len() {
            return Err(OntologyError::DimensionMismatch {
                expected: domains.len(),
                actual: raw_edges.len(),
            });
        }
        let bins = raw_edges.first().map_or(0, |e| e.len().saturating_sub(1));
        let mut warnings = Vec::new();
        let mut dims = Vec::with_capacity(domains.len());
        for (domain, mut edges) in domains.iter().zip(raw_edges) {
            if bins == 0 || edges.len() != bins + 1 {
                return Err(OntologyError::InvalidDimension {
                    name: domain.name.clone(),
                    reason: format!("expected {} edges, found {}", bins + 1, edges.len()),
                });
            }
            edges[0] = domain.min;
            edges[bins] = domain.max;
            widen_collapsed(&domain.name, &mut edges, &mut warnings);
            dims.push(DimensionSpec {
                name: domain.name.clone(),
                domain_min: domain.min,
                domain_max: domain.max,
                edges,
            });
        }
        Ok((Self::new(dims, bins)?, warnings))
    }

    /// Discretization ranges of the 15M-song audio-feature corpus (six
    /// equal-frequency ranges per feature). The two collapsed
    /// instrumentalness boundaries at 0.00 are widened.
    pub fn audio_reference() -> Self {
        let raw = vec![
            vec![0.00, 0.35, 0.48, 0.58, 0.67, 0.76, 1.00],
            vec![0.00, 0.20, 0.42, 0.59, 0.73, 0.86, 1.00],
            vec![0.00, 0.03, 0.04, 0.05, 0.07, 0.13, 1.00],
            vec![0.00, 0.01, 0.06, 0.27, 0.66, 0.92, 1.00],
            vec![0.00, 0.00, 0.00, 0.03, 0.61, 0.87, 1.00],
            vec![0.00, 0.08, 0.10, 0.12, 0.18, 0.33, 1.00],
            vec![0.00, 0.14, 0.29, 0.43, 0.59, 0.77, 1.00],
            vec![0.0, 88.0, 105.0, 120.0, 129.0, 145.0, 250.0],
        ];
        let (ontology, _) = Self::with_widened_edges(&DimensionDomain::audio_features(), raw)
            .expect("reference edges are valid");
        ontology
    }

    pub fn dimensions(&self) -> &[DimensionSpec] {
        &self.dimensions
    }

    pub fn dim_count(&self) -> usize {
        self.dimensions.len()
    }

    pub fn bins_per_dim(&self) -> usize {
        self.bins_per_dim
    }

    pub fn dimension_names(&self) -> impl Iterator<Item = &str> {
        self.dimensions.iter().map(|d| d.name.as_str())
    }

    pub fn domains(&self) -> Vec<DimensionDomain> {
        self.dimensions
            .iter()
            .map(|d| DimensionDomain::new(d.name.clone(), d.domain_min, d.domain_max))
            .collect()
    }

    /// Number of grid cells, `n^d`. Saturates at `u128::MAX`.
    pub fn total_bins(&self) -> u128 {
        total_bins(self.bins_per_dim, self.dimensions.len())
    }

    pub fn check_features(&self, v: &FeatureVector) -> Result<(), OntologyError> {
        check_against(&self.domains(), v)
    }

    pub fn assign_bin(&self, v: &FeatureVector) -> Result<DiscretePosition, OntologyError> {
        if v.len() != self.dim_count() {
            return Err(OntologyError::DimensionMismatch {
                expected: self.dim_count(),
                actual: v.len(),
            });
        }
        let mut indices = Vec::with_capacity(v.len());
        for (dim, &value) in self.dimensions.iter().zip(v.values()) {
            if !(value >= dim.domain_min && value <= dim.domain_max) {
                return Err(OntologyError::OutOfDomain {
                    name: dim.name.clone(),
                    value,
                    min: dim.domain_min,
                    max: dim.domain_max,
                });
            }
            indices.push(dim.locate(value) as u16);
        }
        Ok(DiscretePosition(indices))
    }

    /// Bulk binning; output order follows input order.
    pub fn assign_all(&self, vs: &[FeatureVector]) -> Result<Vec<DiscretePosition>, OntologyError> {
        vs.par_iter().map(|v| self.assign_bin(v)).collect()
    }

    pub fn check_position(&self, p: &DiscretePosition) -> Result<(), OntologyError> {
        if p.len() != self.dim_count() {
            return Err(OntologyError::DimensionMismatch {
                expected: self.dim_count(),
                actual: p.len(),
            });
        }
        for (dim, &index) in p.indices().iter().enumerate() {
            if index as usize >= self.bins_per_dim {
                return Err(OntologyError::IndexOutOfRange {
                    dim,
                    index: index as usize,
                    bins: self.bins_per_dim,
                });
            }
        }
        Ok(())
    }

    pub fn bin_center(&self, p: &DiscretePosition) -> Result<NormalizedPoint, OntologyError> {
        self.check_position(p)?;
        Ok(self.center_unchecked(p))
    }

    pub(crate) fn center_unchecked(&self, p: &DiscretePosition) -> NormalizedPoint {
        grid_point(p, self.bins_per_dim)
    }

    /// Native-unit midpoint of the bin at `p`; always strictly inside the bin.
    pub fn native_center(&self, p: &DiscretePosition) -> Result<FeatureVector, OntologyError> {
        self.check_position(p)?;
        Ok(FeatureVector(
            self.dimensions
                .iter()
                .zip(p.indices())
                .map(|(dim, &i)| {
                    let (lo, hi) = (dim.edges[i as usize], dim.edges[i as usize + 1]);
                    let mid = lo + (hi - lo) / 2.0;
                    // One-ulp bins (widened edges) have no interior point.
                    if mid <= lo { hi } else { mid }
                })
                .collect(),
        ))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&OntologyFile::from(self)).expect("ontology serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, OntologyFileError> {
        let file: OntologyFile = serde_json::from_str(text)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(OntologyFileError::Version(file.schema_version));
        }
        Ok(Ontology::new(file.dimensions, file.bins_per_dim)?)
    }
}

#[derive(Debug, Error)]
pub enum OntologyFileError {
    #[error("malformed ontology file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported ontology schema version {0}")]
    Version(u32),
    #[error(transparent)]
    Invalid(#[from] OntologyError),
}

#[derive(Serialize, Deserialize)]
struct OntologyFile {
    schema_version: u32,
    bins_per_dim: usize,
    dimensions: Vec<DimensionSpec>,
}

impl From<&Ontology> for OntologyFile {
    fn from(o: &Ontology) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            bins_per_dim: o.bins_per_dim,
            dimensions: o.dimensions.clone(),
        }
    }
}

/// Unit-cube center `(i + 0.5) / n` of every index in `p`; no range check.
pub fn grid_point(p: &DiscretePosition, bins_per_dim: usize) -> NormalizedPoint {
    let n = bins_per_dim as f64;
    NormalizedPoint(p.indices().iter().map(|&i| (f64::from(i) + 0.5) / n).collect())
}

pub fn total_bins(bins_per_dim: usize, dims: usize) -> u128 {
    let mut total: u128 = 1;
    for _ in 0..dims {
        total = total.saturating_mul(bins_per_dim as u128);
    }
    total
}

fn widen_collapsed(name: &str, edges: &mut [f64], warnings: &mut Vec<EdgeWarning>) {
    let last = edges.len() - 1;
    for i in 1..last {
        if edges[i] <= edges[i - 1] {
            let widened = edges[i - 1].next_up();
            warnings.push(EdgeWarning {
                dimension: name.to_string(),
                edge: i,
                original: edges[i],
                widened,
            });
            edges[i] = widened;
        }
    }
    // Mass piled up at the upper bound: walk back down from the max.
    for i in (1..last).rev() {
        if edges[i] >= edges[i + 1] {
            let widened = edges[i + 1].next_down();
            warnings.push(EdgeWarning {
                dimension: name.to_string(),
                edge: i,
                original: edges[i],
                widened,
            });
            edges[i] = widened;
        }
    }
}

fn check_against(domains: &[DimensionDomain], v: &FeatureVector) -> Result<(), OntologyError> {
    if v.len() != domains.len() {
        return Err(OntologyError::DimensionMismatch {
            expected: domains.len(),
            actual: v.len(),
        });
    }
    for (d, &value) in domains.iter().zip(v.values()) {
        if !(value >= d.min && value <= d.max) {
            return Err(OntologyError::OutOfDomain {
                name: d.name.clone(),
                value,
                min: d.min,
                max: d.max,
            });
        }
    }
    Ok(())
}

/// Fits `n` equal-frequency ranges per dimension.
///
/// Interior edge `k` is the largest value of the `k`-th rank slice
/// `[floor((k-1)N/n), floor(kN/n))` of the sorted column, so with
/// right-closed bins every bin receives exactly its slice when values are
/// distinct. Outer edges are the domain bounds.
pub fn fit_edges(
    domains: &[DimensionDomain],
    corpus: &[FeatureVector],
    n: usize,
) -> Result<(Ontology, Vec<EdgeWarning>), OntologyError> {
    if corpus.is_empty() {
        return Err(OntologyError::EmptyCorpus);
    }
    if n == 0 {
        return Err(OntologyError::ZeroBins);
    }
    for v in corpus {
        check_against(domains, v)?;
    }
    let total = corpus.len();
    let raw: Vec<Vec<f64>> = domains
        .par_iter()
        .enumerate()
        .map(|(k, domain)| {
            let mut column: Vec<f64> = corpus.iter().map(|v| v.values()[k]).collect();
            column.sort_by(f64::total_cmp);
            let distinct = 1 + column.windows(2).filter(|w| w[0] != w[1]).count();
            if distinct < n {
                return Err(OntologyError::DegenerateDimension {
                    name: domain.name.clone(),
                    distinct,
                    bins: n,
                });
            }
            let mut edges = Vec::with_capacity(n + 1);
            edges.push(domain.min);
            for b in 1..n {
                let rank = b * total / n;
                edges.push(column[rank.max(1) - 1]);
            }
            edges.push(domain.max);
            Ok(edges)
        })
        .collect::<Result<_, _>>()?;
    Ontology::with_widened_edges(domains, raw)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionStep {
    pub bins: usize,
    pub occupied: u64,
    pub occupancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionSearch {
    pub bins: usize,
    pub occupancy: f64,
    pub steps: Vec<ResolutionStep>,
}

/// Number of distinct grid cells hit by `corpus` under `ontology`.
pub fn occupied_bins(ontology: &Ontology, corpus: &[FeatureVector]) -> Result<u64, OntologyError> {
    let positions = ontology.assign_all(corpus)?;
    let seen: HashSet<DiscretePosition> = positions.into_iter().collect();
    Ok(seen.len() as u64)
}

/// Largest `n <= n_max` whose fitted grid has at least `threshold` of its
/// `n^d` cells occupied.
///
/// Scans upward from `n = 1`; stops early once the corpus is too small to
/// ever reach the threshold or a dimension runs out of distinct values.
pub fn search_resolution(
    domains: &[DimensionDomain],
    corpus: &[FeatureVector],
    threshold: f64,
    n_max: usize,
) -> Result<ResolutionSearch, OntologyError> {
    if corpus.is_empty() {
        return Err(OntologyError::EmptyCorpus);
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(OntologyError::InvalidThreshold(threshold));
    }
    let mut steps = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for n in 1..=n_max.max(1) {
        let cells = total_bins(n, domains.len()) as f64;
        if (corpus.len() as f64) < threshold * cells {
            break;
        }
        let ontology = match fit_edges(domains, corpus, n) {
            Ok((o, _)) => o,
            Err(OntologyError::DegenerateDimension { .. }) => break,
            Err(e) => return Err(e),
        };
        let occupied = occupied_bins(&ontology, corpus)?;
        let occupancy = occupied as f64 / cells;
        steps.push(ResolutionStep { bins: n, occupied, occupancy });
        if occupancy >= threshold {
            best = Some((n, occupancy));
        }
    }
    match best {
        Some((bins, occupancy)) => Ok(ResolutionSearch { bins, occupancy, steps }),
        None => Err(OntologyError::NoFeasibleResolution { n_max, threshold }),
    }
}

/// One value per ontology dimension, in native units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Grid cell: one bin index per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiscretePosition(pub Vec<u16>);

impl DiscretePosition {
    pub fn indices(&self) -> &[u16] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<u16>> for DiscretePosition {
    fn from(v: Vec<u16>) -> Self {
        Self(v)
    }
}

impl fmt::Display for DiscretePosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")
    }
}

/// Unit-cube coordinates of a bin center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalizedPoint(pub Vec<f64>);

impl NormalizedPoint {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

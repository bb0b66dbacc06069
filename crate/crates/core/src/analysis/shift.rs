use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::{AnalysisError, SCHEMA_VERSION};
use crate::extraction::ExtractionSet;
use crate::geometry::euclidean;
use crate::rng::{stream_rng, SHIFT_BASELINE};
use crate::stats::{compare, ComparisonResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulationShift {
    pub formulation: String,
    /// Genres with a non-zero shift vector for this formulation.
    pub genres: usize,
    pub zero_vectors: usize,
    /// Fewer than `k + 1` genres took part; scores are absent.
    pub insufficient_genres: bool,
    pub global_mean_cosine: Option<f64>,
    pub knn_mean_cosine: Option<f64>,
    pub baseline_global_mean: Option<f64>,
    pub baseline_knn_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub schema_version: u32,
    pub k: usize,
    pub baseline_rounds: usize,
    pub seed: u64,
    pub formulations: Vec<FormulationShift>,
    /// formulation -> genre -> position minus genre centroid, unit-cube coordinates.
    pub shift_vectors: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
    pub global: ComparisonResult,
    pub knn: ComparisonResult,
}

/// Cosine of two integer vectors; exactly +-1 for parallel inputs, `None`
/// if either is zero.
pub fn exact_cosine(a: &[i64], b: &[i64]) -> Option<f64> {
    let (mut dot, mut na, mut nb) = (0i128, 0i128, 0i128);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as i128, y as i128);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0 || nb == 0 {
        return None;
    }
    let sign = if dot < 0 { -1.0 } else { 1.0 };
    let (num, den) = ((dot * dot) as u128, (na as u128) * (nb as u128));
    if num == den {
        return Some(sign);
    }
    Some(sign * (num as f64 / den as f64).sqrt())
}

struct GenreShifts<'a> {
    genre: &'a str,
    centroid: Vec<f64>,
    /// `m * idx - sum(idx)`: the shift scaled by `m * n`, kept integral.
    scaled: BTreeMap<&'a str, Vec<i64>>,
    normalized: BTreeMap<&'a str, Vec<f64>>,
}

/// Per genre, every formulation's offset from the genre's centroid.
fn genre_shifts(set: &ExtractionSet, bins_per_dim: usize) -> Option<GenreShifts<'_>> {
    let m = set.results.len();
    let first = set.results.values().next()?;
    let d = first.indices().len();
    let mut sum = vec![0i64; d];
    for p in set.results.values() {
        for (s, &i) in sum.iter_mut().zip(p.indices()) {
            *s += i64::from(i);
        }
    }
    let scale = (m * bins_per_dim) as f64;
    let mut scaled = BTreeMap::new();
    let mut normalized = BTreeMap::new();
    for (f, p) in &set.results {
        let v: Vec<i64> = p.indices().iter().zip(&sum).map(|(&i, s)| m as i64 * i64::from(i) - s).collect();
        normalized.insert(f.as_str(), v.iter().map(|&x| x as f64 / scale).collect());
        scaled.insert(f.as_str(), v);
    }
    let n = bins_per_dim as f64;
    let centroid = sum.iter().map(|&s| (s as f64 / m as f64 + 0.5) / n).collect();
    Some(GenreShifts {
        genre: &set.genre,
        centroid,
        scaled,
        normalized,
    })
}

pub fn shift_vectors(sets: &[ExtractionSet], bins_per_dim: usize) -> BTreeMap<String, BTreeMap<String, Vec<f64>>> {
    let mut out: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for g in sets.iter().filter_map(|s| genre_shifts(s, bins_per_dim)) {
        for (f, v) in g.normalized {
            out.entry(f.to_string()).or_default().insert(g.genre.to_string(), v);
        }
    }
    out
}

/// Mean cosine over all unordered pairs and over each member's `k`
/// nearest neighbours (by centroid, ties to the earlier genre).
fn scores(vectors: &[&[i64]], neighbours: &[Vec<usize>]) -> (f64, f64) {
    let n = vectors.len();
    let (mut global, mut pairs) = (0.0, 0usize);
    for i in 0..n {
        for j in i + 1..n {
            global += exact_cosine(vectors[i], vectors[j]).expect("zero vectors filtered");
            pairs += 1;
        }
    }
    let (mut local, mut links) = (0.0, 0usize);
    for (i, near) in neighbours.iter().enumerate() {
        for &j in near {
            local += exact_cosine(vectors[i], vectors[j]).expect("zero vectors filtered");
            links += 1;
        }
    }
    (global / pairs as f64, local / links as f64)
}

fn nearest(centroids: &[&[f64]], k: usize) -> Vec<Vec<usize>> {
    (0..centroids.len())
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..centroids.len())
                .filter(|&j| j != i)
                .map(|j| (euclidean(centroids[i], centroids[j]), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Cross-genre agreement of the offsets one formulation induces.
///
/// The baseline redraws, for every participating genre, the offset of a
/// random formulation of that same genre (`baseline_rounds` times per
/// formulation), which keeps each genre's spread but breaks the link to
/// the formulation.
pub fn shift_suite(
    sets: &[ExtractionSet],
    bins_per_dim: usize,
    k: usize,
    baseline_rounds: usize,
    seed: u64,
) -> Result<ShiftReport, AnalysisError> {
    if k == 0 {
        return Err(AnalysisError::ZeroNeighbours);
    }
    let genres: Vec<GenreShifts> = sets.iter().filter_map(|s| genre_shifts(s, bins_per_dim)).collect();
    let formulation_ids: BTreeSet<&str> = genres.iter().flat_map(|g| g.scaled.keys().copied()).collect();
    let pools: Vec<Vec<&[i64]>> = genres
        .iter()
        .map(|g| g.scaled.values().filter(|v| v.iter().any(|&x| x != 0)).map(Vec::as_slice).collect())
        .collect();

    let mut formulations = Vec::new();
    let (mut observed_global, mut observed_knn) = (Vec::new(), Vec::new());
    let (mut base_global, mut base_knn) = (Vec::new(), Vec::new());
    for (fi, f) in formulation_ids.iter().enumerate() {
        let mut zero_vectors = 0;
        let mut members = Vec::new();
        for (gi, g) in genres.iter().enumerate() {
            if let Some(v) = g.scaled.get(f) {
                if v.iter().all(|&x| x == 0) {
                    zero_vectors += 1;
                } else {
                    members.push((gi, v.as_slice()));
                }
            }
        }
        let mut row = FormulationShift {
            formulation: f.to_string(),
            genres: members.len(),
            zero_vectors,
            insufficient_genres: members.len() < k + 1,
            global_mean_cosine: None,
            knn_mean_cosine: None,
            baseline_global_mean: None,
            baseline_knn_mean: None,
        };
        if !row.insufficient_genres {
            let centroids: Vec<&[f64]> = members.iter().map(|(gi, _)| genres[*gi].centroid.as_slice()).collect();
            let near = nearest(&centroids, k);
            let vectors: Vec<&[i64]> = members.iter().map(|(_, v)| *v).collect();
            let (global, knn) = scores(&vectors, &near);
            row.global_mean_cosine = Some(global);
            row.knn_mean_cosine = Some(knn);
            observed_global.push(global);
            observed_knn.push(knn);

            let mut rng = stream_rng(seed, SHIFT_BASELINE, fi as u64);
            let (mut bg, mut bk) = (Vec::new(), Vec::new());
            for _ in 0..baseline_rounds {
                let drawn: Vec<&[i64]> = members
                    .iter()
                    .map(|(gi, _)| *pools[*gi].choose(&mut rng).expect("member has a non-zero shift"))
                    .collect();
                let (g, kn) = scores(&drawn, &near);
                bg.push(g);
                bk.push(kn);
            }
            if baseline_rounds > 0 {
                row.baseline_global_mean = Some(bg.iter().sum::<f64>() / bg.len() as f64);
                row.baseline_knn_mean = Some(bk.iter().sum::<f64>() / bk.len() as f64);
            }
            base_global.extend(bg);
            base_knn.extend(bk);
        }
        formulations.push(row);
    }
    Ok(ShiftReport {
        schema_version: SCHEMA_VERSION,
        k,
        baseline_rounds,
        seed,
        formulations,
        shift_vectors: shift_vectors(sets, bins_per_dim),
        global: compare(&observed_global, &base_global),
        knn: compare(&observed_knn, &base_knn),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_cosine_of_parallel_vectors() {
        assert_eq!(exact_cosine(&[3, -6, 9], &[1, -2, 3]), Some(1.0));
        assert_eq!(exact_cosine(&[3, -6, 9], &[-1, 2, -3]), Some(-1.0));
        assert_eq!(exact_cosine(&[1, 0], &[0, 5]), Some(0.0));
        assert_eq!(exact_cosine(&[0, 0], &[0, 5]), None);
        let c = exact_cosine(&[1, 1], &[1, 0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn neighbours_exclude_self_and_break_ties_by_order() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0], vec![-1.0], vec![5.0]];
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        assert_eq!(nearest(&refs, 2)[0], vec![1, 2]);
        assert_eq!(nearest(&refs, 1)[3], vec![1]);
    }
}

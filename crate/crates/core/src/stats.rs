//! Uniform grid baselines, Welch's t-test and Cohen's d.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::checked_beta_reg;
use thiserror::Error;

use crate::geometry::PointCloud;
use crate::ontology::{grid_point, DiscretePosition};
use crate::rng::{stream_rng, BASELINE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("each sample needs at least 2 values (got {a} and {b})")]
    InsufficientSample { a: usize, b: usize },
    #[error("both samples have zero variance")]
    DegenerateSample,
    #[error("pooled standard deviation is zero")]
    ZeroVariance,
    #[error("incomplete beta evaluation failed: {0}")]
    Numeric(String),
    #[error("invalid baseline: {0}")]
    InvalidBaseline(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub points_per_group: usize,
    pub groups: usize,
    pub seed: u64,
    pub bins_per_dim: usize,
    pub dims: usize,
}

impl BaselineSpec {
    pub fn new(bins_per_dim: usize, dims: usize, groups: usize, seed: u64) -> Self {
        Self {
            points_per_group: 47,
            groups,
            seed,
            bins_per_dim,
            dims,
        }
    }

    fn validate(&self) -> Result<(), StatsError> {
        if self.points_per_group < 2 || self.groups == 0 || self.bins_per_dim == 0 || self.dims == 0 {
            return Err(StatsError::InvalidBaseline(format!(
                "need points_per_group >= 2 and positive groups, bins and dims: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Grid positions drawn uniformly and independently per coordinate; group
/// `g` uses its own stream, so groups can be regenerated individually.
pub fn sample_uniform_grid(spec: &BaselineSpec) -> Result<Vec<Vec<DiscretePosition>>, StatsError> {
    spec.validate()?;
    let n = spec.bins_per_dim as u16;
    Ok((0..spec.groups)
        .into_par_iter()
        .map(|g| {
            let mut rng = stream_rng(spec.seed, BASELINE, g as u64);
            (0..spec.points_per_group)
                .map(|_| DiscretePosition((0..spec.dims).map(|_| rng.random_range(0..n)).collect()))
                .collect()
        })
        .collect())
}

pub fn sample_uniform_positions(spec: &BaselineSpec) -> Result<Vec<PointCloud>, StatsError> {
    Ok(sample_uniform_grid(spec)?
        .into_iter()
        .map(|group| {
            PointCloud::new(group.iter().map(|p| grid_point(p, spec.bins_per_dim).0).collect())
                .expect("non-empty group of equal-length points")
        })
        .collect())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    if m % 2 == 1 {
        s[m / 2]
    } else {
        (s[m / 2 - 1] + s[m / 2]) / 2.0
    }
}

/// Unbiased sample variance (divisor `n - 1`).
pub fn variance(xs: &[f64]) -> f64 {
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn standard_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Two-sided Welch unequal-variance t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::InsufficientSample { a: a.len(), b: b.len() });
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a) / na, variance(b) / nb);
    let se2 = va + vb;
    if se2 == 0.0 {
        return Err(StatsError::DegenerateSample);
    }
    let t = (mean(a) - mean(b)) / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let x = df / (df + t * t);
    let p_value = checked_beta_reg(df / 2.0, 0.5, x).map_err(|e| StatsError::Numeric(e.to_string()))?;
    Ok(WelchResult {
        t,
        df,
        p_value: p_value.clamp(0.0, 1.0),
    })
}

/// `(mean(observed) - mean(baseline)) / pooled_sd`.
pub fn cohens_d(observed: &[f64], baseline: &[f64]) -> Result<f64, StatsError> {
    if observed.len() < 2 || baseline.len() < 2 {
        return Err(StatsError::InsufficientSample {
            a: observed.len(),
            b: baseline.len(),
        });
    }
    let (na, nb) = (observed.len() as f64, baseline.len() as f64);
    let pooled = (((na - 1.0) * variance(observed) + (nb - 1.0) * variance(baseline)) / (na + nb - 2.0)).sqrt();
    if pooled == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((mean(observed) - mean(baseline)) / pooled)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub observed_n: usize,
    pub baseline_n: usize,
    /// Summaries are absent for an empty sample.
    pub observed_mean: Option<f64>,
    pub observed_median: Option<f64>,
    pub baseline_mean: Option<f64>,
    pub baseline_median: Option<f64>,
    pub t: Option<f64>,
    pub df: Option<f64>,
    pub p_value: Option<f64>,
    pub cohens_d: Option<f64>,
    /// Why a statistic is missing, when one is.
    pub note: Option<String>,
}

/// Summary plus Welch and Cohen's d; statistics that cannot be computed
/// are left empty with a note instead of failing the whole comparison.
pub fn compare(observed: &[f64], baseline: &[f64]) -> ComparisonResult {
    let summary = |xs: &[f64]| if xs.is_empty() { (None, None) } else { (Some(mean(xs)), Some(median(xs))) };
    let (om, omed) = summary(observed);
    let (bm, bmed) = summary(baseline);
    let welch = welch_t_test(observed, baseline);
    let d = cohens_d(observed, baseline);
    let note = match (&welch, &d) {
        (Err(e), _) | (_, Err(e)) => Some(e.to_string()),
        _ => None,
    };
    let welch = welch.ok();
    ComparisonResult {
        observed_n: observed.len(),
        baseline_n: baseline.len(),
        observed_mean: om,
        observed_median: omed,
        baseline_mean: bm,
        baseline_median: bmed,
        t: welch.map(|w| w.t),
        df: welch.map(|w| w.df),
        p_value: welch.map(|w| w.p_value),
        cohens_d: d.ok(),
        note,
    }
}

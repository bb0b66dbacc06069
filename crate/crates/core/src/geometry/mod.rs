//! Distances, spread and volume measures over small point clouds.

mod hull;
mod pca;

pub use hull::hull_2d;
pub use pca::{fit_pca, PcaModel};

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::ontology::NormalizedPoint;

/// Singular values at or below this are treated as zero regardless of `tol`.
const RANK_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point has {actual} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("radius must be non-negative, got {0}")]
    NegativeRadius(f64),
    #[error("ball dimension must be at least 1")]
    ZeroDimension,
    #[error("vector is zero after shifting")]
    ZeroVector,
    #[error("cannot keep {k} components of a {d}-dimensional cloud")]
    InvalidComponents { k: usize, d: usize },
    #[error("all points coincide; covariance is zero")]
    DegenerateCovariance,
    #[error("rank tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        let dim = points.first().ok_or(GeometryError::EmptyCloud)?.len();
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(GeometryError::DimensionMismatch {
                expected: dim,
                actual: bad.len(),
            });
        }
        Ok(Self { points, dim })
    }

    pub fn from_points(points: &[NormalizedPoint]) -> Result<Self, GeometryError> {
        Self::new(points.iter().map(|p| p.0.clone()).collect())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Translated copy; handy for invariance checks.
    pub fn translated(&self, offset: &[f64]) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| p.iter().zip(offset).map(|(a, b)| a + b).collect())
                .collect(),
            dim: self.dim,
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Coordinate-wise mean, accumulated relative to the first point so that
/// coincident points reproduce that point exactly.
pub fn centroid(cloud: &PointCloud) -> Vec<f64> {
    let origin = &cloud.points[0];
    let m = cloud.len() as f64;
    let mut acc = vec![0.0; cloud.dim];
    for p in &cloud.points[1..] {
        for ((a, x), o) in acc.iter_mut().zip(p).zip(origin) {
            *a += x - o;
        }
    }
    origin.iter().zip(acc).map(|(o, a)| o + a / m).collect()
}

pub fn centroid_distances(cloud: &PointCloud) -> Vec<f64> {
    let c = centroid(cloud);
    cloud.points.iter().map(|p| euclidean(p, &c)).collect()
}

pub fn mean_centroid_distance(cloud: &PointCloud) -> f64 {
    let d = centroid_distances(cloud);
    d.iter().sum::<f64>() / d.len() as f64
}

pub fn mean_pairwise_distance(cloud: &PointCloud) -> Result<f64, GeometryError> {
    let m = cloud.len();
    if m < 2 {
        return Err(GeometryError::InsufficientPoints { needed: 2, got: m });
    }
    let mut total = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            total += euclidean(&cloud.points[i], &cloud.points[j]);
        }
    }
    Ok(total / (m * (m - 1) / 2) as f64)
}

/// Dimension of the smallest affine flat containing the cloud: the number
/// of singular values of the centered data above `tol * sigma_max`.
pub fn affine_dimension(cloud: &PointCloud, tol: f64) -> Result<usize, GeometryError> {
    if !(tol > 0.0) {
        return Err(GeometryError::InvalidTolerance(tol));
    }
    let c = centroid(cloud);
    let m = cloud.len();
    let centered = DMatrix::from_fn(m, cloud.dim, |i, j| cloud.points[i][j] - c[j]);
    let sv = centered.singular_values();
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    if sigma_max <= RANK_FLOOR {
        return Ok(0);
    }
    let cut = (tol * sigma_max).max(RANK_FLOOR);
    Ok(sv.iter().filter(|&&s| s > cut).count())
}

/// `ln V_d(r)` with `V_d(r) = pi^(d/2) r^d / Gamma(d/2 + 1)`.
pub fn ln_ball_volume(d: usize, radius: f64) -> Result<f64, GeometryError> {
    if d == 0 {
        return Err(GeometryError::ZeroDimension);
    }
    if radius < 0.0 || radius.is_nan() {
        return Err(GeometryError::NegativeRadius(radius));
    }
    let half = d as f64 / 2.0;
    Ok(half * std::f64::consts::PI.ln() + d as f64 * radius.ln() - ln_gamma(half + 1.0))
}

/// Volume of a `d`-ball of the given radius as a fraction of the unit cube.
/// Not clipped: radii large enough to leave the cube give values above 1.
pub fn ball_volume_fraction(d: usize, radius: f64) -> Result<f64, GeometryError> {
    let ln = ln_ball_volume(d, radius)?;
    Ok(if radius == 0.0 { 0.0 } else { ln.exp() })
}

/// Cosine of the angle between `a - shift` and `b - shift`, clamped to [-1, 1].
pub fn cosine_similarity(a: &[f64], b: &[f64], shift: Option<f64>) -> Result<f64, GeometryError> {
    if a.len() != b.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let s = shift.unwrap_or(0.0);
    let (mut dot, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x - s, y - s);
        dot += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(GeometryError::ZeroVector);
    }
    Ok((dot / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cloud(points: &[&[f64]]) -> PointCloud {
        PointCloud::new(points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn centroid_basics() {
        assert_eq!(centroid(&cloud(&[&[0.25, 0.75]])), vec![0.25, 0.75]);
        assert_eq!(centroid(&cloud(&[&[0.0, 1.0], &[1.0, 0.0]])), vec![0.5, 0.5]);
        assert_eq!(PointCloud::new(vec![]), Err(GeometryError::EmptyCloud));
        assert!(matches!(
            PointCloud::new(vec![vec![1.0], vec![1.0, 2.0]]),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn coincident_points_have_zero_spread() {
        let p = vec![1.0 / 12.0, 0.75, 11.0 / 12.0, 0.25];
        let c = PointCloud::new(vec![p; 47]).unwrap();
        assert_eq!(mean_centroid_distance(&c), 0.0);
        assert_eq!(mean_pairwise_distance(&c).unwrap(), 0.0);
        assert_eq!(affine_dimension(&c, 1e-9).unwrap(), 0);
    }

    #[test]
    fn distances_on_simple_shapes() {
        let two = cloud(&[&[0.0, 0.0], &[2.0, 0.0]]);
        assert_eq!(mean_centroid_distance(&two), 1.0);
        let h = 3f64.sqrt() / 2.0;
        let tri = cloud(&[&[0.0, 0.0], &[1.0, 0.0], &[0.5, h]]);
        assert!((mean_pairwise_distance(&tri).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(
            mean_pairwise_distance(&cloud(&[&[0.0]])),
            Err(GeometryError::InsufficientPoints { needed: 2, got: 1 })
        );
    }

    #[test]
    fn affine_dimension_of_lines_and_planes() {
        let line = cloud(&[&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]]);
        assert_eq!(affine_dimension(&line, 1e-9).unwrap(), 1);
        let (u, v) = ([1.0, 0.0, 2.0, 0.0, 1.0, 0.0, 0.0, 3.0], [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 2.0, 0.0]);
        let pts: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                let (a, b) = (i as f64 * 0.37 - 1.0, (i * i) as f64 * 0.11);
                (0..8).map(|k| 0.5 + a * u[k] + b * v[k]).collect()
            })
            .collect();
        assert_eq!(affine_dimension(&PointCloud::new(pts).unwrap(), 1e-9).unwrap(), 2);
        assert!(affine_dimension(&line, 0.0).is_err());
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(ball_volume_fraction(8, 0.0).unwrap(), 0.0);
        assert!((ball_volume_fraction(2, 1.0).unwrap() - std::f64::consts::PI).abs() < 1e-14);
        let sphere = 4.0 / 3.0 * std::f64::consts::PI;
        assert!((ball_volume_fraction(3, 1.0).unwrap() - sphere).abs() < 1e-12 * sphere);
        // pi^4 / 24 * r^8
        let r: f64 = 0.765;
        let direct = std::f64::consts::PI.powi(4) / 24.0 * r.powi(8);
        assert!((ball_volume_fraction(8, r).unwrap() - direct).abs() < 1e-14);
        assert_eq!(ball_volume_fraction(8, -0.1), Err(GeometryError::NegativeRadius(-0.1)));
        assert_eq!(ball_volume_fraction(0, 1.0), Err(GeometryError::ZeroDimension));
        assert!(ball_volume_fraction(8, 1.2).unwrap() > 1.0);
        assert!(ln_ball_volume(400, 10.0).unwrap().is_finite());
        assert_eq!(ball_volume_fraction(400, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn cosine_cases() {
        let a = [0.2, 0.4, 0.9];
        assert!((cosine_similarity(&a, &a, None).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0], None).unwrap(), 0.0);
        assert_eq!(cosine_similarity(&[0.5; 4], &[0.1; 4], Some(0.5)), Err(GeometryError::ZeroVector));
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[-2.0, 0.0], None).unwrap(), -1.0);
    }

    fn arb_cloud() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..6).prop_flat_map(|d| prop::collection::vec(prop::collection::vec(0.0f64..1.0, d), 2..12))
    }

    proptest! {
        #[test]
        fn spread_is_translation_invariant(points in arb_cloud(), shift in -3.0f64..3.0) {
            let c = PointCloud::new(points).unwrap();
            let moved = c.translated(&vec![shift; c.dim()]);
            prop_assert!((mean_centroid_distance(&c) - mean_centroid_distance(&moved)).abs() < 1e-12);
            prop_assert!((mean_pairwise_distance(&c).unwrap() - mean_pairwise_distance(&moved).unwrap()).abs() < 1e-12);
            prop_assert_eq!(affine_dimension(&c, 1e-9).unwrap(), affine_dimension(&moved, 1e-9).unwrap());
        }

        #[test]
        fn ball_volume_recurrence(d in 3usize..40, r in 0.01f64..3.0) {
            let v = ball_volume_fraction(d, r).unwrap();
            let v2 = ball_volume_fraction(d - 2, r).unwrap();
            let expected = v2 * 2.0 * std::f64::consts::PI * r * r / d as f64;
            prop_assert!((v - expected).abs() <= 1e-12 * expected.abs().max(1e-300));
            prop_assert!(ball_volume_fraction(d, r * 1.01).unwrap() > v);
        }

        #[test]
        fn cosine_symmetric_and_scale_invariant(
            a in prop::collection::vec(-1.0f64..1.0, 4),
            b in prop::collection::vec(-1.0f64..1.0, 4),
            alpha in 0.01f64..100.0,
        ) {
            prop_assume!(a.iter().any(|x| x.abs() > 1e-3) && b.iter().any(|x| x.abs() > 1e-3));
            let ab = cosine_similarity(&a, &b, None).unwrap();
            prop_assert_eq!(ab, cosine_similarity(&b, &a, None).unwrap());
            let scaled: Vec<f64> = a.iter().map(|x| x * alpha).collect();
            prop_assert!((ab - cosine_similarity(&scaled, &b, None).unwrap()).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&ab));
        }
    }
}

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{centroid, GeometryError, PointCloud};

/// Principal axes of a point cloud.
///
/// Each component is a unit vector whose largest-magnitude entry is
/// positive, so fits are reproducible across platforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    /// Trace of the sample covariance.
    pub total_variance: f64,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.explained_variance.iter().map(|v| v / self.total_variance).collect()
    }

    pub fn project(&self, point: &[f64]) -> Result<Vec<f64>, GeometryError> {
        if point.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                actual: point.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(point.iter().zip(&self.mean)).map(|(w, (x, m))| w * (x - m)).sum())
            .collect())
    }
}

/// Top-`k` eigenvectors of the sample covariance (divisor `m - 1`).
pub fn fit_pca(cloud: &PointCloud, k: usize) -> Result<PcaModel, GeometryError> {
    let (m, d) = (cloud.len(), cloud.dim());
    if m < 2 {
        return Err(GeometryError::InsufficientPoints { needed: 2, got: m });
    }
    if k == 0 || k > d {
        return Err(GeometryError::InvalidComponents { k, d });
    }
    let mean = centroid(cloud);
    let centered = DMatrix::from_fn(m, d, |i, j| cloud.points()[i][j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (m - 1) as f64;
    let total_variance = cov.trace();
    if total_variance <= 0.0 {
        return Err(GeometryError::DegenerateCovariance);
    }
    let eigen = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]).then(a.cmp(&b)));
    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut v: Vec<f64> = eigen.eigenvectors.column(idx).iter().copied().collect();
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained_variance.push(eigen.eigenvalues[idx].max(0.0));
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
        total_variance,
    })
}

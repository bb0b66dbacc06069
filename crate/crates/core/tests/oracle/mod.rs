//! Slow, independent reimplementations of the numeric kernels, and seeded
//! randomized fixtures comparing the library against them.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use vecont_core::geometry::{affine_dimension, fit_pca, hull_2d, PointCloud};
use vecont_core::stats::{cohens_d, welch_t_test};

pub const LINALG_TOL: f64 = 1e-8;
pub const P_VALUE_TOL: f64 = 1e-9;
pub const EFFECT_TOL: f64 = 1e-12;

pub fn rng(i: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + i)
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

/// Rank by Gaussian elimination with partial pivoting.
pub fn elimination_rank(mut rows: Vec<Vec<f64>>, tol: f64) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..rows.len()).max_by(|&a, &b| rows[a][c].abs().total_cmp(&rows[b][c].abs())) else {
            break;
        };
        if rows[pivot][c].abs() <= tol {
            continue;
        }
        rows.swap(rank, pivot);
        for r in rank + 1..rows.len() {
            let f = rows[r][c] / rows[rank][c];
            for k in c..cols {
                rows[r][k] -= f * rows[rank][k];
            }
        }
        rank += 1;
    }
    rank
}

pub fn check_affine_dimension(fixtures: u64) -> Result<(), String> {
    for i in 0..fixtures {
        let mut r = rng(i);
        let d = r.random_range(2..=8);
        let k = r.random_range(0..=d);
        let m = r.random_range(k + 2..k + 12);
        // Small-integer spanning vectors keep the planted rank exact.
        let basis: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| r.random_range(-3..=3) as f64).collect()).collect();
        let origin: Vec<f64> = (0..d).map(|_| r.random_range(-5..=5) as f64).collect();
        let points: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let coef: Vec<f64> = (0..k).map(|_| r.random_range(-4..=4) as f64).collect();
                (0..d).map(|j| origin[j] + (0..k).map(|b| coef[b] * basis[b][j]).sum::<f64>()).collect()
            })
            .collect();
        let centered: Vec<Vec<f64>> = points.iter().map(|p| p.iter().zip(&points[0]).map(|(a, b)| a - b).collect()).collect();
        let expected = elimination_rank(centered, 1e-9);
        let got = affine_dimension(&PointCloud::new(points).unwrap(), 1e-9).map_err(|e| e.to_string())?;
        if got != expected {
            return Err(format!("affine fixture {i}: rank {got}, oracle {expected}"));
        }
    }
    Ok(())
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

type Key = (u64, u64);

fn key(p: [f64; 2]) -> Key {
    (p[0].to_bits(), p[1].to_bits())
}

/// Directed edges `p -> q` with every other point strictly to the left.
pub fn brute_hull_edges(pts: &[[f64; 2]]) -> BTreeMap<Key, Key> {
    let mut edges = BTreeMap::new();
    for (i, &p) in pts.iter().enumerate() {
        for (j, &q) in pts.iter().enumerate() {
            if i != j && pts.iter().enumerate().all(|(k, &s)| k == i || k == j || cross(p, q, s) > 0.0) {
                edges.insert(key(p), key(q));
            }
        }
    }
    edges
}

pub fn check_hull(fixtures: u64) -> Result<(), String> {
    for i in 0..fixtures {
        let mut r = rng(100 + i);
        let pts: Vec<[f64; 2]> = (0..20).map(|_| [normal(&mut r), normal(&mut r)]).collect();
        let hull = hull_2d(&pts);
        let oracle = brute_hull_edges(&pts);
        if hull.len() != oracle.len() {
            return Err(format!("hull fixture {i}: {} vertices, oracle {}", hull.len(), oracle.len()));
        }
        for w in 0..hull.len() {
            let (p, q) = (hull[w], hull[(w + 1) % hull.len()]);
            if oracle.get(&key(p)) != Some(&key(q)) {
                return Err(format!("hull fixture {i}: edge {w} is not a counter-clockwise hull edge"));
            }
        }
    }
    Ok(())
}

/// Cyclic Jacobi rotations; returns eigenvalues and eigenvectors as columns.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

pub fn check_pca(fixtures: u64) -> Result<(), String> {
    for i in 0..fixtures {
        let mut r = rng(200 + i);
        let d = r.random_range(2..=6);
        let m = r.random_range(d + 5..40);
        let scales: Vec<f64> = (0..d).map(|j| 1.0 + 1.5 * j as f64).collect();
        let points: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|j| normal(&mut r) * scales[j]).collect()).collect();
        let mean: Vec<f64> = (0..d).map(|j| points.iter().map(|p| p[j]).sum::<f64>() / m as f64).collect();
        let cov: Vec<Vec<f64>> = (0..d)
            .map(|a| {
                (0..d)
                    .map(|b| points.iter().map(|p| (p[a] - mean[a]) * (p[b] - mean[b])).sum::<f64>() / (m - 1) as f64)
                    .collect()
            })
            .collect();
        let (values, vectors) = jacobi_eigen(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

        let k = r.random_range(1..=d);
        let model = fit_pca(&PointCloud::new(points).unwrap(), k).map_err(|e| e.to_string())?;
        for (c, &o) in order.iter().take(k).enumerate() {
            if (model.explained_variance[c] - values[o]).abs() >= LINALG_TOL {
                return Err(format!("pca fixture {i}: eigenvalue {c} {} vs {}", model.explained_variance[c], values[o]));
            }
            let mut column: Vec<f64> = (0..d).map(|row| vectors[row][o]).collect();
            let lead = column.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap();
            if lead < 0.0 {
                column.iter_mut().for_each(|x| *x = -*x);
            }
            for (a, b) in model.components[c].iter().zip(&column) {
                if (a - b).abs() >= LINALG_TOL {
                    return Err(format!("pca fixture {i}: component {c} entry {a} vs {b}"));
                }
            }
        }
        if model.mean.iter().zip(&mean).any(|(a, b)| (a - b).abs() >= 1e-12) {
            return Err(format!("pca fixture {i}: mean differs"));
        }
    }
    Ok(())
}

/// Lanczos approximation, g = 7.
pub fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let t = x + 7.5;
    let s = C[0] + (1..9).map(|i| C[i] / (x + i as f64)).sum::<f64>();
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + s.ln()
}

pub fn t_density(x: f64, nu: f64) -> f64 {
    let ln_norm = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * std::f64::consts::PI).ln();
    (ln_norm - (nu + 1.0) / 2.0 * (1.0 + x * x / nu).ln()).exp()
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, whole: f64, depth: u32) -> f64 {
    let m = (a + b) / 2.0;
    let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let left = (m - a) / 6.0 * (fa + 4.0 * f(lm) + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * f(rm) + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, eps / 2.0, left, depth - 1) + simpson(f, m, b, eps / 2.0, right, depth - 1)
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let whole = (b - a) / 6.0 * (f(a) + 4.0 * f((a + b) / 2.0) + f(b));
    simpson(f, a, b, 1e-14, whole, 50)
}

pub fn sample_var(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn check_welch(fixtures: u64) -> Result<(), String> {
    for i in 0..fixtures {
        let mut r = rng(300 + i);
        let (na, nb) = (r.random_range(3..30), r.random_range(3..30));
        let shift = r.random_range(-1.5..1.5);
        let spread = r.random_range(0.3..3.0);
        let a: Vec<f64> = (0..na).map(|_| normal(&mut r) + shift).collect();
        let b: Vec<f64> = (0..nb).map(|_| normal(&mut r) * spread).collect();

        let (va, vb) = (sample_var(&a) / na as f64, sample_var(&b) / nb as f64);
        let t = (a.iter().sum::<f64>() / na as f64 - b.iter().sum::<f64>() / nb as f64) / (va + vb).sqrt();
        let nu = (va + vb).powi(2) / (va * va / (na - 1) as f64 + vb * vb / (nb - 1) as f64);
        let p = 1.0 - 2.0 * integrate(&|x| t_density(x, nu), 0.0, t.abs());

        let w = welch_t_test(&a, &b).map_err(|e| e.to_string())?;
        if (w.t - t).abs() >= 1e-12 || (w.df - nu).abs() >= 1e-9 {
            return Err(format!("welch fixture {i}: t/df {} {} vs {t} {nu}", w.t, w.df));
        }
        if (w.p_value - p).abs() >= P_VALUE_TOL {
            return Err(format!("welch fixture {i}: p {} vs {p}", w.p_value));
        }
    }
    Ok(())
}

pub fn check_cohens_d(fixtures: u64) -> Result<(), String> {
    for i in 0..fixtures {
        let mut r = rng(400 + i);
        let (na, nb) = (r.random_range(2..40), r.random_range(2..40));
        let a: Vec<f64> = (0..na).map(|_| normal(&mut r) * 2.0 + 1.0).collect();
        let b: Vec<f64> = (0..nb).map(|_| normal(&mut r)).collect();
        let pooled = (((na - 1) as f64 * sample_var(&a) + (nb - 1) as f64 * sample_var(&b)) / (na + nb - 2) as f64).sqrt();
        let expected = (a.iter().sum::<f64>() / na as f64 - b.iter().sum::<f64>() / nb as f64) / pooled;
        let got = cohens_d(&a, &b).map_err(|e| e.to_string())?;
        if (got - expected).abs() >= EFFECT_TOL {
            return Err(format!("cohen fixture {i}: {got} vs {expected}"));
        }
    }
    Ok(())
}

//! Grouping of numerically computed eigenvalues into clusters.
//!
//! A Jordan block of size `m` splits under perturbation of size `eps` into
//! eigenvalues about `eps^(1/m)` apart, so the admissible diameter of a
//! cluster grows with its size. The user tolerance is a floor.

use nalgebra::{Complex, DMatrix};

use super::SpectralError;

/// Perturbation scale assumed for the eigenvalue solver, relative to `1 + |A|`.
const SOLVER_EPS: f64 = 1e4 * f64::EPSILON;
/// Distinct clusters closer than this many admissible radii are ambiguous.
const AMBIGUITY_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RawCluster {
    /// Centroid of the members.
    pub value: Complex<f64>,
    pub members: Vec<Complex<f64>>,
}

impl RawCluster {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

/// Largest diameter allowed for a cluster of `m` eigenvalues.
pub fn admissible_radius(m: usize, cluster_tol: f64, scale: f64) -> f64 {
    let spread = if m <= 1 {
        0.0
    } else {
        SOLVER_EPS.powf(1.0 / m as f64)
    };
    scale * cluster_tol.max(spread)
}

fn diameter(points: &[Complex<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

fn centroid(points: &[Complex<f64>]) -> Complex<f64> {
    points.iter().sum::<Complex<f64>>() / points.len() as f64
}

/// Single-linkage components of `points` at distance `radius`.
fn components(points: &[Complex<f64>], radius: f64) -> Vec<Vec<Complex<f64>>> {
    let mut label: Vec<Option<usize>> = vec![None; points.len()];
    let mut out = Vec::new();
    for start in 0..points.len() {
        if label[start].is_some() {
            continue;
        }
        let id = out.len();
        label[start] = Some(id);
        let mut stack = vec![start];
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            members.push(points[i]);
            for j in 0..points.len() {
                if label[j].is_none() && (points[i] - points[j]).norm() <= radius {
                    label[j] = Some(id);
                    stack.push(j);
                }
            }
        }
        out.push(members);
    }
    out
}

/// Accept components whose diameter fits their size; split the rest with the
/// radius of the next smaller size.
fn split(
    points: Vec<Complex<f64>>,
    size_bound: usize,
    cluster_tol: f64,
    scale: f64,
    out: &mut Vec<Vec<Complex<f64>>>,
) {
    let radius = admissible_radius(size_bound, cluster_tol, scale);
    for comp in components(&points, radius) {
        let m = comp.len();
        if m == 1 || diameter(&comp) <= admissible_radius(m, cluster_tol, scale) {
            out.push(comp);
        } else {
            split(comp, (m - 1).min(size_bound), cluster_tol, scale, out);
        }
    }
}

/// Spectral norm of a real matrix.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().max()
}

/// Eigenvalues of `a` grouped into clusters, in no particular order.
pub fn cluster_eigenvalues(
    a: &DMatrix<f64>,
    cluster_tol: f64,
) -> Result<Vec<RawCluster>, SpectralError> {
    let scale = 1.0 + spectral_norm(a);
    let eig = a.complex_eigenvalues();
    if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SpectralError::IllConditioned(
            "eigenvalue solver produced non-finite values".into(),
        ));
    }
    let points: Vec<Complex<f64>> = eig.iter().copied().collect();
    let mut clusters = Vec::new();
    let size = points.len();
    split(points, size, cluster_tol, scale, &mut clusters);
    for i in 0..clusters.len() {
        for j in i + 1..clusters.len() {
            let m = clusters[i].len() + clusters[j].len();
            let gap = (centroid(&clusters[i]) - centroid(&clusters[j])).norm();
            let limit = AMBIGUITY_FACTOR * admissible_radius(m, cluster_tol, scale);
            if gap <= limit {
                return Err(SpectralError::IllConditioned(format!(
                    "eigenvalue clusters at {} and {} are {gap:.3e} apart, within {limit:.3e}",
                    centroid(&clusters[i]),
                    centroid(&clusters[j]),
                )));
            }
        }
    }
    let snap = scale * cluster_tol;
    Ok(clusters
        .into_iter()
        .map(|members| {
            let mut value = centroid(&members);
            if value.im.abs() <= snap {
                value.im = 0.0;
            }
            RawCluster { value, members }
        })
        .collect())
}

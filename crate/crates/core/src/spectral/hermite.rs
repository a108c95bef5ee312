//! Spectral projections as Hermite interpolation polynomials in `A`.
//!
//! For a cluster at `c` with multiplicity `m`, `P = g(A) t(A)` where
//! `g(z) = prod_mu ((z - c_mu) / (c - c_mu))^(m_mu)` vanishes to order `m_mu`
//! at every other cluster and `t` is the degree `< m` Taylor polynomial of
//! `1 / g` at `c`.

use nalgebra::{Complex, DMatrix};

use super::cluster::RawCluster;

pub type CMatrix = DMatrix<Complex<f64>>;

pub fn complexify(a: &DMatrix<f64>) -> CMatrix {
    a.map(|x| Complex::new(x, 0.0))
}

/// Frobenius norm of a complex matrix.
pub fn cnorm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn shifted(a: &CMatrix, c: Complex<f64>) -> CMatrix {
    let q = a.nrows();
    a - CMatrix::identity(q, q) * c
}

/// Taylor coefficients of `prod_mu (1 + u d_mu)^(-m_mu)` up to `u^(order-1)`.
fn inverse_taylor(factors: &[(Complex<f64>, usize)], order: usize) -> Vec<Complex<f64>> {
    let mut acc = vec![Complex::new(0.0, 0.0); order];
    acc[0] = Complex::new(1.0, 0.0);
    for &(d, m) in factors {
        // (1 + u d)^(-m) = sum_k (-1)^k C(m+k-1, k) d^k u^k
        let mut series = Vec::with_capacity(order);
        let mut coeff = Complex::new(1.0, 0.0);
        for k in 0..order {
            if k > 0 {
                coeff *= -d * ((m + k - 1) as f64 / k as f64);
            }
            series.push(coeff);
        }
        let mut next = vec![Complex::new(0.0, 0.0); order];
        for (i, x) in acc.iter().enumerate() {
            for (j, y) in series.iter().enumerate().take(order - i) {
                next[i + j] += x * y;
            }
        }
        acc = next;
    }
    acc
}

/// Projection onto the generalized eigenspace of cluster `k`.
pub fn hermite_projection(a: &CMatrix, clusters: &[RawCluster], k: usize) -> CMatrix {
    let q = a.nrows();
    let c = clusters[k].value;
    let m = clusters[k].multiplicity();
    let mut g = CMatrix::identity(q, q);
    let mut factors = Vec::new();
    for (i, other) in clusters.iter().enumerate() {
        if i == k {
            continue;
        }
        let denom = c - other.value;
        let factor = shifted(a, other.value) / denom;
        for _ in 0..other.multiplicity() {
            g = &g * &factor;
        }
        factors.push((Complex::new(1.0, 0.0) / denom, other.multiplicity()));
    }
    let coeffs = inverse_taylor(&factors, m);
    let base = shifted(a, c);
    let mut t = CMatrix::zeros(q, q);
    let mut power = CMatrix::identity(q, q);
    for (j, coef) in coeffs.iter().enumerate() {
        if j > 0 {
            power = &power * &base;
        }
        t += &power * *coef;
    }
    g * t
}

/// Largest singular value of a complex matrix.
pub fn cspectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn crank(m: &CMatrix, threshold: f64) -> usize {
    m.clone()
        .singular_values()
        .iter()
        .filter(|&&s| s > threshold)
        .count()
}

/// Nilpotent index and the ranks of `N^1, ..., N^(nu+1)`.
///
/// `nu` is the least `k` with `|N^(k+1)| <= rank_tol |A|^(k+1)`; `None` when
/// no such `k < multiplicity` exists.
pub fn nilpotent_index(
    n: &CMatrix,
    multiplicity: usize,
    rank_tol: f64,
    a_norm: f64,
) -> (Option<usize>, Vec<usize>, Vec<f64>) {
    let mut ranks = Vec::new();
    let mut norms = Vec::new();
    let mut power = n.clone();
    for k in 0..multiplicity.max(1) {
        let threshold = rank_tol * a_norm.powi(k as i32 + 1);
        let norm = cspectral_norm(&power);
        ranks.push(crank(&power, threshold));
        norms.push(norm);
        if norm <= threshold {
            return (Some(k), ranks, norms);
        }
        power = &power * n;
    }
    (None, ranks, norms)
}

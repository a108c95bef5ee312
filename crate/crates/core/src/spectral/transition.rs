//! Products `F_{i,j} = prod_{i <= k < j} (I + A / omega_k)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::hermite::{cspectral_norm, CMatrix};
use super::EigenCluster;

/// `omega_k = omega0 + k b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaSeq {
    pub omega0: f64,
    pub b: f64,
}

impl OmegaSeq {
    pub fn new(omega0: f64, b: f64) -> Self {
        Self { omega0, b }
    }

    pub fn at(&self, k: u64) -> f64 {
        self.omega0 + k as f64 * self.b
    }
}

fn factor(a: &DMatrix<f64>, omega: f64) -> DMatrix<f64> {
    let q = a.nrows();
    DMatrix::identity(q, q) + a / omega
}

/// `F_{i,j}`, multiplied left to right; the identity when `i >= j`.
pub fn transition_product(a: &DMatrix<f64>, omega: &OmegaSeq, i: u64, j: u64) -> DMatrix<f64> {
    let q = a.nrows();
    let mut f = DMatrix::identity(q, q);
    for k in i..j {
        f = f * factor(a, omega.at(k));
    }
    f
}

/// `[F_{0,n}, F_{1,n}, ..., F_{n,n}]` by backward accumulation.
pub fn transition_products_to(a: &DMatrix<f64>, omega: &OmegaSeq, n: u64) -> Vec<DMatrix<f64>> {
    let q = a.nrows();
    let mut out = vec![DMatrix::identity(q, q); n as usize + 1];
    for l in (0..n as usize).rev() {
        out[l] = factor(a, omega.at(l as u64)) * &out[l + 1];
    }
    out
}

/// Largest observed `|P F_{l,n}| / ((n/l)^(Re lambda / b) (1 + log(n/l))^nu)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub value: [f64; 2],
    pub nilpotent_index: usize,
    /// Constant over the grid with `n <= n_max / 4`.
    pub c_inner: f64,
    /// Constant over the whole grid.
    pub c_full: f64,
    pub bounded: bool,
}

/// Growth constants on the power-of-two grid `1 <= l <= n <= n_max`.
///
/// `bounded` holds when widening the grid from `n_max / 4` to `n_max` grows
/// the constant by less than half.
pub fn growth_envelope(
    a: &DMatrix<f64>,
    omega: &OmegaSeq,
    clusters: &[EigenCluster],
    n_max: u64,
) -> Vec<Envelope> {
    let mut grid = Vec::new();
    let mut n = 1u64;
    while n <= n_max {
        grid.push(n);
        n *= 2;
    }
    let inner_cap = n_max / 4;
    let mut c_inner = vec![0.0f64; clusters.len()];
    let mut c_full = vec![0.0f64; clusters.len()];
    for &n in &grid {
        let fs = transition_products_to(a, omega, n);
        for &l in grid.iter().filter(|&&l| l <= n) {
            let f = fs[l as usize].map(|x| nalgebra::Complex::new(x, 0.0));
            let ratio = n as f64 / l as f64;
            for (k, c) in clusters.iter().enumerate() {
                let pf: CMatrix = &c.projection * &f;
                let scale = ratio.powf(c.value.re / omega.b)
                    * (1.0 + ratio.ln()).powi(c.nilpotent_index as i32);
                let r = cspectral_norm(&pf) / scale;
                c_full[k] = c_full[k].max(r);
                if n <= inner_cap {
                    c_inner[k] = c_inner[k].max(r);
                }
            }
        }
    }
    clusters
        .iter()
        .enumerate()
        .map(|(k, c)| Envelope {
            value: [c.value.re, c.value.im],
            nilpotent_index: c.nilpotent_index,
            c_inner: c_inner[k],
            c_full: c_full[k],
            bounded: c_full[k] <= 1.5 * c_inner[k] + 1e-12,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_product_is_identity() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let w = OmegaSeq::new(2.0, 1.0);
        assert_eq!(transition_product(&a, &w, 5, 5), DMatrix::identity(2, 2));
    }

    #[test]
    fn polya_products_are_scalar() {
        let a = DMatrix::identity(2, 2);
        let w = OmegaSeq::new(2.0, 1.0);
        // (1 + 1/3)(1 + 1/4) and (1 + 1/2)(1 + 1/3)
        let f13 = transition_product(&a, &w, 1, 3);
        let f02 = transition_product(&a, &w, 0, 2);
        assert!((f13 - DMatrix::identity(2, 2) * (5.0 / 3.0)).norm() < 1e-15);
        assert!((f02 - DMatrix::identity(2, 2) * 2.0).norm() < 1e-15);
    }

    #[test]
    fn backward_accumulation_matches_direct_products() {
        let a = DMatrix::from_row_slice(2, 2, &[0.2, 0.7, 0.8, 0.3]);
        let w = OmegaSeq::new(1.5, 1.0);
        let all = transition_products_to(&a, &w, 12);
        for (l, f) in all.iter().enumerate() {
            let direct = transition_product(&a, &w, l as u64, 12);
            assert!((f - direct).norm() < 1e-12);
        }
    }
}

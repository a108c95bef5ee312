//! Intensity matrix, eigenvalue clusters, spectral projections and the
//! principal pair `(lambda_1, v_1)`.

pub mod cluster;
pub mod hermite;
pub mod transition;

use std::cmp::Ordering;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::urn::{balance_constant, validate_spec, UrnError, UrnSpec, BALANCE_TOL};
use cluster::{cluster_eigenvalues, spectral_norm, RawCluster};
use hermite::{cnorm, complexify, hermite_projection, nilpotent_index, CMatrix};
pub use transition::{growth_envelope, transition_product, transition_products_to, Envelope, OmegaSeq};

/// Largest matrix handled by the dense routines.
pub const MAX_DIM: usize = 64;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpectralError {
    #[error(transparent)]
    Urn(#[from] UrnError),
    #[error("ill-conditioned spectrum: {0}")]
    IllConditioned(String),
    #[error("no eigenvalue matches b = {b} (nearest real part {nearest})")]
    DominantMismatch { b: f64, nearest: f64 },
    #[error("eigenvalue b = {b} has multiplicity {multiplicity}")]
    NotSimple { b: f64, multiplicity: usize },
    #[error("matrix dimension {0} exceeds {MAX_DIM}")]
    TooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub cluster_tol: f64,
    /// Relative to `|A|^k` for the `k`-th power of a nilpotent part.
    pub rank_tol: f64,
    /// Relative to `q`.
    pub proj_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            cluster_tol: 1e-8,
            rank_tol: 1e-8,
            proj_tol: 1e-6,
        }
    }
}

/// `A_{ij} = a_j E[xi_{j,i}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMatrix {
    pub entries: DMatrix<f64>,
}

impl IntensityMatrix {
    pub fn q(&self) -> usize {
        self.entries.nrows()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

pub fn intensity_matrix(spec: &UrnSpec) -> Result<IntensityMatrix, SpectralError> {
    validate_spec(spec)?;
    let q = spec.q;
    let mut entries = DMatrix::zeros(q, q);
    for j in 0..q {
        let aj = spec.activities[j];
        if aj == 0.0 {
            continue;
        }
        for o in &spec.replacements[j] {
            for i in 0..q {
                entries[(i, j)] += aj * o.prob * o.delta[i];
            }
        }
    }
    Ok(IntensityMatrix { entries })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenCluster {
    pub value: Complex<f64>,
    pub algebraic_multiplicity: usize,
    pub nilpotent_index: usize,
    pub projection: CMatrix,
    pub nilpotent_part: CMatrix,
    /// Raw eigenvalues from the solver that were grouped here.
    pub members: Vec<Complex<f64>>,
    /// Numerical ranks of `N, N^2, ...`.
    pub power_ranks: Vec<usize>,
}

fn order_clusters(clusters: &mut [EigenCluster], tie: f64) {
    clusters.sort_by(|x, y| {
        if (x.value.re - y.value.re).abs() > tie {
            return y.value.re.total_cmp(&x.value.re);
        }
        match y.nilpotent_index.cmp(&x.nilpotent_index) {
            Ordering::Equal => y.value.im.total_cmp(&x.value.im),
            other => other,
        }
    });
}

/// Projections, nilpotent parts and nilpotent indices for given clusters.
pub fn spectral_projections(
    a: &DMatrix<f64>,
    clusters: &[RawCluster],
    tol: &Tolerances,
) -> Result<Vec<EigenCluster>, SpectralError> {
    let q = a.nrows();
    let ac = complexify(a);
    let a_norm = spectral_norm(a);
    let mut out = Vec::with_capacity(clusters.len());
    for (k, raw) in clusters.iter().enumerate() {
        let p = hermite_projection(&ac, clusters, k);
        let n = (&ac - CMatrix::identity(q, q) * raw.value) * &p;
        let m = raw.multiplicity();
        let (nu, ranks, norms) = nilpotent_index(&n, m, tol.rank_tol, a_norm);
        let Some(nu) = nu else {
            return Err(SpectralError::IllConditioned(format!(
                "nilpotent part at {} does not vanish by power {m} (norms {norms:?})",
                raw.value
            )));
        };
        out.push(EigenCluster {
            value: raw.value,
            algebraic_multiplicity: m,
            nilpotent_index: nu,
            projection: p,
            nilpotent_part: n,
            members: raw.members.clone(),
            power_ranks: ranks,
        });
    }
    let residual = sum_residual(&out);
    if residual > tol.proj_tol * q as f64 {
        return Err(SpectralError::IllConditioned(format!(
            "projections sum to the identity only within {residual:.3e}"
        )));
    }
    order_clusters(&mut out, (1.0 + a_norm) * tol.cluster_tol);
    Ok(out)
}

/// Clusters with projections, sorted by decreasing real part, then
/// decreasing nilpotent index, then decreasing imaginary part.
pub fn eigen_structure(a: &DMatrix<f64>, tol: &Tolerances) -> Result<Vec<EigenCluster>, SpectralError> {
    if a.nrows() > MAX_DIM {
        return Err(SpectralError::TooLarge(a.nrows()));
    }
    let raw = cluster_eigenvalues(a, tol.cluster_tol)?;
    spectral_projections(a, &raw, tol)
}

/// Cluster values repeated by multiplicity, in cluster order.
pub fn eigenvalue_multiset(clusters: &[EigenCluster]) -> Vec<Complex<f64>> {
    clusters
        .iter()
        .flat_map(|c| std::iter::repeat_n(c.value, c.algebraic_multiplicity))
        .collect()
}

fn sum_residual(clusters: &[EigenCluster]) -> f64 {
    let Some(first) = clusters.first() else { return 0.0 };
    let q = first.projection.nrows();
    let mut sum = -CMatrix::identity(q, q);
    for c in clusters {
        sum += &c.projection;
    }
    cnorm(&sum)
}

/// Residuals of the projection identities, Frobenius norms throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionDiagnostics {
    pub sum_minus_identity: f64,
    pub idempotence: f64,
    pub cross_products: f64,
    pub commutator: f64,
    /// Largest `|N^(nu+1)| / |A|^(nu+1)`.
    pub nilpotent_tail: f64,
    /// Smallest `|N^nu|` over its vanishing threshold, across clusters with `nu > 0`.
    pub nilpotent_head_margin: Option<f64>,
    /// Largest imaginary part of `P + conj(P)` over conjugate pairs.
    pub conjugate_imaginary: f64,
    pub a_norm: f64,
}

pub fn projection_diagnostics(a: &DMatrix<f64>, clusters: &[EigenCluster], tol: &Tolerances) -> ProjectionDiagnostics {
    let ac = complexify(a);
    let a_norm = spectral_norm(a);
    let mut d = ProjectionDiagnostics {
        sum_minus_identity: sum_residual(clusters),
        idempotence: 0.0,
        cross_products: 0.0,
        commutator: 0.0,
        nilpotent_tail: 0.0,
        nilpotent_head_margin: None,
        conjugate_imaginary: 0.0,
        a_norm,
    };
    for (i, c) in clusters.iter().enumerate() {
        let p = &c.projection;
        d.idempotence = d.idempotence.max(cnorm(&(p * p - p)));
        d.commutator = d.commutator.max(cnorm(&(&ac * p - p * &ac)));
        for (j, other) in clusters.iter().enumerate() {
            if i != j {
                d.cross_products = d.cross_products.max(cnorm(&(p * &other.projection)));
            }
        }
        let nu = c.nilpotent_index;
        let mut head = CMatrix::identity(p.nrows(), p.ncols());
        for _ in 0..nu {
            head = &head * &c.nilpotent_part;
        }
        let power = &head * &c.nilpotent_part;
        let tail = hermite::cspectral_norm(&power) / a_norm.max(f64::MIN_POSITIVE).powi(nu as i32 + 1);
        d.nilpotent_tail = d.nilpotent_tail.max(tail);
        if nu > 0 {
            let threshold = tol.rank_tol * a_norm.powi(nu as i32);
            let margin = hermite::cspectral_norm(&head) / threshold;
            d.nilpotent_head_margin = Some(d.nilpotent_head_margin.map_or(margin, |m: f64| m.min(margin)));
        }
        if c.value.im > 0.0 {
            let partner = clusters
                .iter()
                .filter(|o| o.algebraic_multiplicity == c.algebraic_multiplicity)
                .min_by(|x, y| {
                    (x.value - c.value.conj())
                        .norm()
                        .total_cmp(&(y.value - c.value.conj()).norm())
                });
            if let Some(partner) = partner {
                let s = p + &partner.projection;
                let im = s.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                d.conjugate_imaginary = d.conjugate_imaginary.max(im);
            }
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    StrictlySmall,
    SmallCritical,
    Large,
    DominantNotSimple,
}

/// Classification and gap `lambda_1 - 2 Re lambda_2`.
pub fn classify(
    clusters: &[EigenCluster],
    b: f64,
    tol: f64,
) -> Result<(Classification, f64), SpectralError> {
    let dominant = clusters
        .iter()
        .position(|c| (c.value - Complex::new(b, 0.0)).norm() <= tol);
    let Some(k) = dominant else {
        let nearest = clusters
            .iter()
            .map(|c| c.value.re)
            .min_by(|x, y| (x - b).abs().total_cmp(&(y - b).abs()))
            .unwrap_or(f64::NAN);
        return Err(SpectralError::DominantMismatch { b, nearest });
    };
    let mut rest = eigenvalue_multiset(clusters);
    let skip = clusters[..k].iter().map(|c| c.algebraic_multiplicity).sum::<usize>();
    rest.remove(skip);
    let re2 = rest
        .iter()
        .map(|z| z.re)
        .max_by(f64::total_cmp)
        .unwrap_or(f64::NEG_INFINITY);
    let gap = b - 2.0 * re2;
    let class = if clusters[k].algebraic_multiplicity > 1 {
        Classification::DominantNotSimple
    } else if gap.abs() <= tol {
        Classification::SmallCritical
    } else if gap > 0.0 {
        Classification::StrictlySmall
    } else {
        Classification::Large
    };
    Ok((class, gap))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalPair {
    pub lambda1: f64,
    pub v1: Vec<f64>,
    /// `max |A v_1 - lambda_1 v_1|`.
    pub eigen_residual: f64,
    /// `|a . v_1 - 1|`.
    pub normalization_residual: f64,
    /// `|P_{lambda_1} - v_1 a^T|`.
    pub projection_residual: f64,
}

/// Right eigenvector for `b`, normalized by `a . v_1 = 1`.
pub fn principal_pair(
    a: &DMatrix<f64>,
    activities: &[f64],
    b: f64,
    tol: &Tolerances,
) -> Result<PrincipalPair, SpectralError> {
    let clusters = eigen_structure(a, tol)?;
    principal_pair_from(a, activities, b, &clusters, tol)
}

pub fn principal_pair_from(
    a: &DMatrix<f64>,
    activities: &[f64],
    b: f64,
    clusters: &[EigenCluster],
    tol: &Tolerances,
) -> Result<PrincipalPair, SpectralError> {
    let q = a.nrows();
    let match_tol = (1.0 + spectral_norm(a)) * tol.cluster_tol;
    let Some(cluster) = clusters
        .iter()
        .find(|c| (c.value - Complex::new(b, 0.0)).norm() <= match_tol)
    else {
        return Err(SpectralError::DominantMismatch {
            b,
            nearest: clusters.first().map_or(f64::NAN, |c| c.value.re),
        });
    };
    if cluster.algebraic_multiplicity > 1 {
        return Err(SpectralError::NotSimple {
            b,
            multiplicity: cluster.algebraic_multiplicity,
        });
    }
    let av = DVector::from_column_slice(activities);
    let mut system = DMatrix::zeros(q + 1, q);
    system
        .view_mut((0, 0), (q, q))
        .copy_from(&(a - DMatrix::identity(q, q) * b));
    system.row_mut(q).copy_from(&av.transpose());
    let mut rhs = DVector::zeros(q + 1);
    rhs[q] = 1.0;
    let svd = system.svd(true, true);
    let mut v = svd
        .solve(&rhs, f64::EPSILON * 16.0)
        .map_err(|e| SpectralError::IllConditioned(e.to_string()))?;
    let scale = av.dot(&v);
    if scale == 0.0 || !scale.is_finite() {
        return Err(SpectralError::IllConditioned("a . v_1 vanishes".into()));
    }
    v /= scale;
    let eigen_residual = (a * &v - &v * b).amax();
    let normalization_residual = (av.dot(&v) - 1.0).abs();
    let outer = complexify(&(&v * av.transpose()));
    let projection_residual = cnorm(&(&cluster.projection - outer));
    Ok(PrincipalPair {
        lambda1: b,
        v1: v.iter().copied().collect(),
        eigen_residual,
        normalization_residual,
        projection_residual,
    })
}

/// Everything the analysis of one spec produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub intensity: IntensityMatrix,
    pub clusters: Vec<EigenCluster>,
    pub b: f64,
    pub strictly_balanced: bool,
    pub principal: Option<PrincipalPair>,
    pub classification: Classification,
    pub gap: f64,
    pub diagnostics: ProjectionDiagnostics,
    /// `max |a^T A - b a^T|`.
    pub left_eigen_residual: f64,
}

pub fn analyze(spec: &UrnSpec, tol: &Tolerances) -> Result<SpectralReport, SpectralError> {
    let intensity = intensity_matrix(spec)?;
    let balance = balance_constant(spec, BALANCE_TOL)?;
    let a = &intensity.entries;
    let clusters = eigen_structure(a, tol)?;
    let match_tol = (1.0 + spectral_norm(a)) * tol.cluster_tol;
    let (classification, gap) = classify(&clusters, balance.b, match_tol)?;
    let principal = match classification {
        Classification::DominantNotSimple => None,
        _ => Some(principal_pair_from(a, &spec.activities, balance.b, &clusters, tol)?),
    };
    let av = DVector::from_column_slice(&spec.activities);
    let left_eigen_residual = (av.transpose() * a - av.transpose() * balance.b).amax();
    let diagnostics = projection_diagnostics(a, &clusters, tol);
    Ok(SpectralReport {
        intensity,
        clusters,
        b: balance.b,
        strictly_balanced: balance.strictly_balanced,
        principal,
        classification,
        gap,
        diagnostics,
        left_eigen_residual,
    })
}

type Pair = [f64; 2];

fn pair(z: &Complex<f64>) -> Pair {
    [z.re, z.im]
}

fn pair_rows(m: &CMatrix) -> Vec<Vec<Pair>> {
    m.row_iter().map(|r| r.iter().map(pair).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub value: Pair,
    pub algebraic_multiplicity: usize,
    pub nilpotent_index: usize,
    pub power_ranks: Vec<usize>,
    pub members: Vec<Pair>,
    pub projection: Vec<Vec<Pair>>,
    pub nilpotent_part: Vec<Vec<Pair>>,
}

/// Serializable form of a [`SpectralReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralRecord {
    pub intensity: Vec<Vec<f64>>,
    pub eigenvalues: Vec<Pair>,
    pub clusters: Vec<ClusterRecord>,
    pub b: f64,
    pub strictly_balanced: bool,
    pub lambda1: f64,
    pub v1: Option<Vec<f64>>,
    pub principal: Option<PrincipalPair>,
    pub classification: Classification,
    pub gap: f64,
    pub diagnostics: ProjectionDiagnostics,
    pub left_eigen_residual: f64,
}

impl SpectralReport {
    pub fn record(&self) -> SpectralRecord {
        SpectralRecord {
            intensity: self.intensity.rows(),
            eigenvalues: eigenvalue_multiset(&self.clusters).iter().map(pair).collect(),
            clusters: self
                .clusters
                .iter()
                .map(|c| ClusterRecord {
                    value: pair(&c.value),
                    algebraic_multiplicity: c.algebraic_multiplicity,
                    nilpotent_index: c.nilpotent_index,
                    power_ranks: c.power_ranks.clone(),
                    members: c.members.iter().map(pair).collect(),
                    projection: pair_rows(&c.projection),
                    nilpotent_part: pair_rows(&c.nilpotent_part),
                })
                .collect(),
            b: self.b,
            strictly_balanced: self.strictly_balanced,
            lambda1: self.b,
            v1: self.principal.as_ref().map(|p| p.v1.clone()),
            principal: self.principal.clone(),
            classification: self.classification,
            gap: self.gap,
            diagnostics: self.diagnostics.clone(),
            left_eigen_residual: self.left_eigen_residual,
        }
    }
}

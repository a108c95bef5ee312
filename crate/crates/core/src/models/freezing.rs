//! Uniform attachment trees with freezing.
//!
//! At every step a fair coin with bias `p` decides between attaching a new
//! active child to a uniformly chosen active vertex (`x = +1`) or freezing
//! that vertex (`x = -1`). The urn tracks vertices by status and outdegree,
//! with outdegrees `>= K` lumped together:
//!
//! | type       | meaning                          | activity |
//! |------------|----------------------------------|----------|
//! | `2m`       | active, outdegree `m < K`        | 1        |
//! | `2m + 1`   | frozen, outdegree `m < K`        | 0        |
//! | `2K`       | active, outdegree `>= K`         | 1        |
//! | `2K + 1`   | frozen, outdegree `>= K`         | 0        |

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::rng::{Domain, StreamSeed};
use crate::urn::{Outcome, UrnSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreezingParams {
    /// Outdegree cutoff `K >= 1`.
    pub k: usize,
    /// Probability of `x_i = +1`, in `(1/2, 1]`.
    pub p: f64,
}

impl FreezingParams {
    pub fn new(k: usize, p: f64) -> Result<Self, ModelError> {
        if k == 0 {
            return Err(ModelError::InvalidParams("K must be at least 1".into()));
        }
        if !(p > 0.5 && p <= 1.0) {
            return Err(ModelError::InvalidParams(format!(
                "p = {p} must lie in (1/2, 1]"
            )));
        }
        Ok(Self { k, p })
    }

    pub fn q(&self) -> usize {
        2 * self.k + 2
    }

    pub fn spec_name(&self) -> String {
        format!("freezing-K{}-p{}", self.k, self.p)
    }
}

fn check(params: &FreezingParams) -> Result<(), ModelError> {
    FreezingParams::new(params.k, params.p).map(|_| ())
}

/// Urn for the outdegree census of the freezing tree, started from one
/// active root.
pub fn freezing_urn_spec(params: &FreezingParams) -> Result<UrnSpec, ModelError> {
    check(params)?;
    let FreezingParams { k, p } = *params;
    let q = params.q();
    let overflow = 2 * k;
    let mut replacements = Vec::with_capacity(q);
    for ty in 0..q {
        let law = if ty % 2 == 1 {
            vec![Outcome::new(1.0, vec![0.0; q])]
        } else {
            let mut freeze = vec![0.0; q];
            freeze[ty] -= 1.0;
            freeze[ty + 1] += 1.0;
            let mut attach = vec![0.0; q];
            if ty != overflow {
                attach[ty] -= 1.0;
                attach[ty + 2] += 1.0;
            }
            attach[0] += 1.0;
            vec![Outcome::new(1.0 - p, freeze), Outcome::new(p, attach)]
        };
        replacements.push(law);
    }
    let mut initial = vec![0.0; q];
    initial[0] = 1.0;
    Ok(UrnSpec {
        name: params.spec_name(),
        q,
        activities: (0..q).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect(),
        initial,
        replacements,
    })
}

/// Closed-form right eigenvector for `lambda_1 = 2p - 1`, normalized so that
/// `a . v_1 = 1`.
pub fn freezing_v1_closed_form(params: &FreezingParams) -> Result<Vec<f64>, ModelError> {
    check(params)?;
    let FreezingParams { k, p } = *params;
    let drift = 2.0 * p - 1.0;
    let mut v = Vec::with_capacity(params.q());
    for m in 0..k {
        let w = 0.5f64.powi(m as i32 + 1);
        v.push(w);
        v.push((1.0 - p) * w / drift);
    }
    let tail = 0.5f64.powi(k as i32);
    v.push(tail);
    v.push((1.0 - p) * tail / drift);
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexStatus {
    Active,
    Frozen { at_step: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeVertex {
    pub parent: Option<usize>,
    pub status: VertexStatus,
    pub outdegree: usize,
}

/// A uniform attachment tree with freezing, grown vertex by vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreezingTree {
    pub vertices: Vec<TreeVertex>,
    active: Vec<usize>,
    pub steps: u64,
    /// `1 + sum x_i` over the steps taken while some vertex was active.
    pub walk: i64,
}

impl FreezingTree {
    pub fn new() -> Self {
        Self {
            vertices: vec![TreeVertex {
                parent: None,
                status: VertexStatus::Active,
                outdegree: 0,
            }],
            active: vec![0],
            steps: 0,
            walk: 1,
        }
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn active_vertices(&self) -> &[usize] {
        &self.active
    }

    /// One growth step. Nothing happens once every vertex is frozen.
    pub fn grow<R: Rng + ?Sized>(&mut self, p: f64, rng: &mut R) {
        self.steps += 1;
        if self.active.is_empty() {
            return;
        }
        let attach = rng.random::<f64>() < p;
        let slot = rng.random_range(0..self.active.len());
        self.apply(slot, attach);
    }

    /// Apply a chosen move to the active vertex stored at `slot`.
    fn apply(&mut self, slot: usize, attach: bool) {
        let v = self.active[slot];
        if attach {
            self.walk += 1;
            let child = self.vertices.len();
            self.vertices.push(TreeVertex {
                parent: Some(v),
                status: VertexStatus::Active,
                outdegree: 0,
            });
            self.vertices[v].outdegree += 1;
            self.active.push(child);
        } else {
            self.walk -= 1;
            self.vertices[v].status = VertexStatus::Frozen {
                at_step: self.steps,
            };
            self.active.swap_remove(slot);
        }
    }

    /// Vertex counts in urn coordinates for cutoff `k`.
    pub fn census(&self, k: usize) -> Vec<usize> {
        let mut out = vec![0; 2 * k + 2];
        for v in &self.vertices {
            let class = v.outdegree.min(k);
            let frozen = matches!(v.status, VertexStatus::Frozen { .. });
            out[2 * class + usize::from(frozen)] += 1;
        }
        out
    }
}

impl Default for FreezingTree {
    fn default() -> Self {
        Self::new()
    }
}

/// Grow a freezing tree for `n` steps on the tree stream of `seed`.
pub fn simulate_freezing_tree(
    params: &FreezingParams,
    n: u64,
    seed: StreamSeed,
) -> Result<FreezingTree, ModelError> {
    check(params)?;
    let mut rng = seed.rng(Domain::FreezingTree);
    let mut tree = FreezingTree::new();
    for _ in 0..n {
        tree.grow(params.p, &mut rng);
    }
    Ok(tree)
}

/// Exact law of the census after `n` steps, found by expanding every
/// sequence of (chosen vertex, coin) at tree level. Probabilities are exact
/// rationals in the binary value of `p`.
pub fn enumerate_freezing_tree(
    params: &FreezingParams,
    n: u64,
) -> Result<BTreeMap<Vec<usize>, BigRational>, ModelError> {
    check(params)?;
    let p = BigRational::from_float(params.p)
        .ok_or_else(|| ModelError::InvalidParams("p is not finite".into()))?;
    let one_minus_p = BigRational::one() - &p;
    let mut frontier = vec![(FreezingTree::new(), BigRational::one())];
    for _ in 0..n {
        let mut next = Vec::with_capacity(frontier.len() * 4);
        for (tree, prob) in frontier {
            let active = tree.active.len();
            if active == 0 {
                let mut t = tree;
                t.steps += 1;
                next.push((t, prob));
                continue;
            }
            let pick = BigRational::new(BigInt::one(), BigInt::from(active));
            for slot in 0..active {
                for (attach, coin) in [(true, &p), (false, &one_minus_p)] {
                    if coin.is_zero() {
                        continue;
                    }
                    let mut t = tree.clone();
                    t.steps += 1;
                    t.apply(slot, attach);
                    next.push((t, &prob * &pick * coin));
                }
            }
        }
        frontier = next;
    }
    let mut law: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
    for (tree, prob) in frontier {
        *law.entry(tree.census(params.k)).or_insert_with(BigRational::zero) += prob;
    }
    Ok(law)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::urn::{balance_constant, Urn};

    fn mean_replacement(spec: &UrnSpec, ty: usize) -> Vec<f64> {
        let mut m = vec![0.0; spec.q];
        for o in &spec.replacements[ty] {
            for (mi, d) in m.iter_mut().zip(&o.delta) {
                *mi += o.prob * d;
            }
        }
        m
    }

    #[test]
    fn expected_replacements_k1() {
        let spec = freezing_urn_spec(&FreezingParams::new(1, 0.75).unwrap()).unwrap();
        assert_eq!(spec.q, 4);
        assert_eq!(spec.activities, vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(mean_replacement(&spec, 0), vec![-0.25, 0.25, 0.75, 0.0]);
        assert_eq!(mean_replacement(&spec, 2), vec![0.75, 0.0, -0.25, 0.25]);
    }

    #[test]
    fn expected_replacements_general_k() {
        // Active outdegree m in 1..K: E xi = p e_0 - e_2m + (1-p) e_{2m+1} + p e_{2m+2}.
        let p = 0.6;
        let spec = freezing_urn_spec(&FreezingParams::new(3, p).unwrap()).unwrap();
        let m = mean_replacement(&spec, 2);
        let want = [p, 0.0, -1.0, 1.0 - p, p, 0.0, 0.0, 0.0];
        for (a, b) in m.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let tail = mean_replacement(&spec, 6);
        let want = [p, 0.0, 0.0, 0.0, 0.0, 0.0, -(1.0 - p), 1.0 - p];
        for (a, b) in tail.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn balance_constant_is_2p_minus_1() {
        for k in 1..=4 {
            for p in [0.55, 0.6, 0.75, 0.9, 1.0] {
                let spec = freezing_urn_spec(&FreezingParams::new(k, p).unwrap()).unwrap();
                let bal = balance_constant(&spec, 1e-12).unwrap();
                assert!((bal.b - (2.0 * p - 1.0)).abs() < 1e-14);
                assert_eq!(bal.strictly_balanced, p == 1.0);
            }
        }
    }

    #[test]
    fn invalid_params() {
        assert!(FreezingParams::new(0, 0.75).is_err());
        assert!(FreezingParams::new(1, 0.5).is_err());
        assert!(FreezingParams::new(1, 1.2).is_err());
        let raw = FreezingParams { k: 1, p: 0.5 };
        assert!(matches!(
            freezing_v1_closed_form(&raw),
            Err(ModelError::InvalidParams(_))
        ));
    }

    #[test]
    fn closed_form_v1_values() {
        let v = freezing_v1_closed_form(&FreezingParams::new(1, 0.75).unwrap()).unwrap();
        assert_eq!(v, vec![0.5, 0.25, 0.5, 0.25]);
        let v = freezing_v1_closed_form(&FreezingParams::new(2, 0.75).unwrap()).unwrap();
        assert_eq!(v, vec![0.5, 0.25, 0.25, 0.125, 0.25, 0.125]);
        for k in 1..=5 {
            for p in [0.6, 0.75, 0.9] {
                let params = FreezingParams::new(k, p).unwrap();
                let v = freezing_v1_closed_form(&params).unwrap();
                let spec = freezing_urn_spec(&params).unwrap();
                let av: f64 = spec.activities.iter().zip(&v).map(|(a, x)| a * x).sum();
                assert!((av - 1.0).abs() < 1e-15);
                // A v = (2p - 1) v, checked against the urn's own intensity matrix.
                let urn = Urn::new(spec).unwrap();
                let av_vec = urn.apply_intensity(&v);
                for (l, r) in av_vec.iter().zip(&v) {
                    assert!((l - (2.0 * p - 1.0) * r).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn p_one_grows_a_recursive_tree() {
        let params = FreezingParams::new(2, 1.0).unwrap();
        let tree = simulate_freezing_tree(&params, 100, StreamSeed::new(3, 0)).unwrap();
        assert_eq!(tree.vertices.len(), 101);
        assert_eq!(tree.active_count(), 101);
        assert!(tree.vertices[1..].iter().all(|v| v.parent.is_some()));
    }

    #[test]
    fn zero_steps_is_a_lone_root() {
        let params = FreezingParams::new(2, 0.75).unwrap();
        let tree = simulate_freezing_tree(&params, 0, StreamSeed::new(3, 0)).unwrap();
        assert_eq!(tree.census(2), vec![1, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn active_count_follows_absorbed_walk() {
        let params = FreezingParams::new(1, 0.6).unwrap();
        for t in 0..50 {
            let tree = simulate_freezing_tree(&params, 200, StreamSeed::new(8, t)).unwrap();
            assert_eq!(tree.active_count() as i64, tree.walk.max(0));
            let frozen = tree
                .vertices
                .iter()
                .filter(|v| matches!(v.status, VertexStatus::Frozen { .. }))
                .count();
            assert_eq!(tree.vertices.len(), tree.active_count() + frozen);
        }
    }

    #[test]
    fn tree_enumeration_two_steps() {
        let params = FreezingParams::new(1, 0.75).unwrap();
        let law = enumerate_freezing_tree(&params, 2).unwrap();
        let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(law.len(), 5);
        assert_eq!(law[&vec![0, 1, 0, 0]], r(1, 4));
        assert_eq!(law[&vec![1, 0, 2, 0]], r(9, 32));
        assert_eq!(law[&vec![0, 1, 1, 0]], r(3, 32));
        assert_eq!(law[&vec![2, 0, 1, 0]], r(9, 32));
        assert_eq!(law[&vec![1, 0, 0, 1]], r(3, 32));
    }
}

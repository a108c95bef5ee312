//! Hooking networks, simulated directly on the graph.
//!
//! The network starts as a lone master hook (vertex 0). Each step picks a
//! latch with probability proportional to `chi * deg + rho`, draws a block
//! from the collection and fuses the block's hook onto the latch.

use std::collections::{BTreeSet, HashSet, VecDeque};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::rng::{stream, Domain};

/// Sum of block probabilities must be 1 within this tolerance.
pub const BLOCK_PROB_TOL: f64 = 1e-12;
/// Default candidate budget for the essential-degree closure.
pub const CLOSURE_BUDGET: usize = 1_000_000;

fn default_r() -> usize {
    3
}

/// A connected simple block with a distinguished hook vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockGraph {
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
    pub hook: usize,
    pub prob: f64,
}

impl BlockGraph {
    pub fn new(vertices: usize, edges: Vec<[usize; 2]>, hook: usize, prob: f64) -> Self {
        Self {
            vertices,
            edges,
            hook,
            prob,
        }
    }

    /// A single edge hooked at one endpoint.
    pub fn edge(prob: f64) -> Self {
        Self::new(2, vec![[0, 1]], 0, prob)
    }

    /// A triangle hooked at a corner.
    pub fn triangle(prob: f64) -> Self {
        Self::new(3, vec![[0, 1], [1, 2], [0, 2]], 0, prob)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices];
        for &[u, v] in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Change in total activity when this block is hooked on.
    pub fn activity_increment(&self, chi: f64, rho: f64) -> f64 {
        2.0 * chi * self.edges.len() as f64 + rho * (self.vertices as f64 - 1.0)
    }

    fn validate(&self, index: usize) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidParams(format!("block {index}: {msg}")));
        if self.vertices < 2 {
            return bad(format!("{} vertices, need at least 2", self.vertices));
        }
        if self.hook >= self.vertices {
            return bad(format!("hook {} out of range", self.hook));
        }
        if !self.prob.is_finite() || self.prob < 0.0 {
            return bad(format!("probability {}", self.prob));
        }
        let mut seen = HashSet::new();
        let mut adj = vec![Vec::new(); self.vertices];
        for &[u, v] in &self.edges {
            if u >= self.vertices || v >= self.vertices {
                return bad(format!("edge [{u}, {v}] out of range"));
            }
            if u == v {
                return bad(format!("self-loop at {u}"));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return bad(format!("repeated edge [{u}, {v}]"));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut reached = vec![false; self.vertices];
        let mut queue = VecDeque::from([0]);
        reached[0] = true;
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if !reached[w] {
                    reached[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if reached.iter().any(|r| !r) {
            return bad("not connected".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HookingParams {
    pub blocks: Vec<BlockGraph>,
    pub chi: f64,
    pub rho: f64,
    /// Number of tracked essential degrees.
    #[serde(default = "default_r")]
    pub r: usize,
}

impl HookingParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.blocks.is_empty() {
            return Err(ModelError::InvalidParams("empty block collection".into()));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            b.validate(i)?;
        }
        let total: f64 = self.blocks.iter().map(|b| b.prob).sum();
        if (total - 1.0).abs() > BLOCK_PROB_TOL {
            return Err(ModelError::InvalidParams(format!(
                "block probabilities sum to {total}"
            )));
        }
        if !self.chi.is_finite() || self.chi < 0.0 {
            return Err(ModelError::InvalidParams(format!("chi = {} must be >= 0", self.chi)));
        }
        if !self.rho.is_finite() || self.chi + self.rho <= 0.0 {
            return Err(ModelError::InvalidParams(format!(
                "chi + rho = {} must be positive",
                self.chi + self.rho
            )));
        }
        // The master hook starts with degree 0, so its weight is rho.
        if self.rho <= 0.0 {
            return Err(ModelError::NonpositiveWeight {
                vertex: 0,
                weight: self.rho,
            });
        }
        Ok(())
    }

    fn live_blocks(&self) -> impl Iterator<Item = &BlockGraph> {
        self.blocks.iter().filter(|b| b.prob > 0.0)
    }
}

/// The `r` smallest degrees that two vertices can share.
///
/// A non-hook vertex enters with its block degree and gains the hook degree
/// of every block later fused onto it, so the essential degrees are the
/// non-hook block degrees closed under adding hook degrees. Only the master
/// hook can sit outside this set.
pub fn essential_degrees(
    params: &HookingParams,
    r: usize,
    budget: usize,
) -> Result<Vec<usize>, ModelError> {
    params.validate()?;
    let mut seeds = BTreeSet::new();
    let mut hooks = BTreeSet::new();
    for block in params.live_blocks() {
        let deg = block.degrees();
        hooks.insert(deg[block.hook]);
        for (u, &d) in deg.iter().enumerate() {
            if u != block.hook {
                seeds.insert(d);
            }
        }
    }
    let mut frontier = seeds;
    let mut inserted = frontier.len();
    let mut out = Vec::with_capacity(r);
    while out.len() < r {
        let Some(d) = frontier.pop_first() else { break };
        out.push(d);
        for &h in &hooks {
            if frontier.insert(d + h) {
                inserted += 1;
                if inserted > budget {
                    return Err(ModelError::ClosureBudgetExceeded { budget });
                }
            }
        }
    }
    Ok(out)
}

/// `b = sum_j p_j (2 chi |E_j| + rho (|V_j| - 1))`.
pub fn hooking_balance_constant(params: &HookingParams) -> Result<f64, ModelError> {
    params.validate()?;
    Ok(params
        .blocks
        .iter()
        .map(|b| b.prob * b.activity_increment(params.chi, params.rho))
        .sum())
}

/// Graph state of a hooking network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HookingNetwork {
    pub degrees: Vec<u32>,
    pub edges: Vec<[u32; 2]>,
    /// Both endpoints of every edge; sampling from it is degree-biased.
    endpoints: Vec<u32>,
    pub master_hook: usize,
    /// Tracked incrementally; compare with [`HookingNetwork::recomputed_activity`].
    pub activity: f64,
    pub steps: u64,
}

impl HookingNetwork {
    pub fn new(rho: f64) -> Self {
        Self {
            degrees: vec![0],
            edges: Vec::new(),
            endpoints: Vec::new(),
            master_hook: 0,
            activity: rho,
            steps: 0,
        }
    }

    pub fn recomputed_activity(&self, chi: f64, rho: f64) -> f64 {
        self.degrees.iter().map(|&d| chi * d as f64 + rho).sum()
    }

    /// Count of vertices at each of the given degrees.
    pub fn census(&self, degrees: &[usize]) -> Vec<usize> {
        let mut out = vec![0; degrees.len()];
        for &d in &self.degrees {
            if let Ok(i) = degrees.binary_search(&(d as usize)) {
                out[i] += 1;
            }
        }
        out
    }

    /// Pick a latch with probability `(chi deg + rho) / total`.
    ///
    /// The weight splits into a degree part, sampled through a uniform edge
    /// endpoint, and a flat part, sampled through a uniform vertex.
    fn pick_latch<R: Rng + ?Sized>(&self, chi: f64, rho: f64, rng: &mut R) -> usize {
        let degree_mass = chi * self.endpoints.len() as f64;
        let flat_mass = rho * self.degrees.len() as f64;
        let u = rng.random::<f64>() * (degree_mass + flat_mass);
        if u < degree_mass {
            self.endpoints[rng.random_range(0..self.endpoints.len())] as usize
        } else {
            rng.random_range(0..self.degrees.len())
        }
    }

    /// Fuse `block` onto `latch`; returns the activity increment.
    fn hook(&mut self, block: &BlockGraph, latch: usize, chi: f64, rho: f64) -> f64 {
        let base = self.degrees.len();
        let map = |u: usize| -> u32 {
            if u == block.hook {
                latch as u32
            } else if u < block.hook {
                (base + u) as u32
            } else {
                (base + u - 1) as u32
            }
        };
        self.degrees.resize(base + block.vertices - 1, 0);
        for &[u, v] in &block.edges {
            let (a, b) = (map(u), map(v));
            self.degrees[a as usize] += 1;
            self.degrees[b as usize] += 1;
            self.edges.push([a, b]);
            self.endpoints.push(a);
            self.endpoints.push(b);
        }
        let inc = block.activity_increment(chi, rho);
        self.activity += inc;
        self.steps += 1;
        inc
    }

    pub fn grow<R: Rng + ?Sized>(&mut self, params: &HookingParams, cum: &[f64], rng: &mut R) -> f64 {
        let latch = self.pick_latch(params.chi, params.rho, rng);
        let v = rng.random::<f64>();
        let j = cum
            .iter()
            .position(|&c| v < c)
            .or_else(|| params.blocks.iter().rposition(|b| b.prob > 0.0))
            .unwrap_or(0);
        self.hook(&params.blocks[j], latch, params.chi, params.rho)
    }
}

fn cumulative(params: &HookingParams) -> Vec<f64> {
    let mut acc = 0.0;
    params
        .blocks
        .iter()
        .map(|b| {
            acc += b.prob;
            acc
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HookingCheckpoint {
    pub n: u64,
    pub census: Vec<usize>,
    pub activity: f64,
    pub vertices: usize,
    pub edges: usize,
}

/// One hooking run observed at checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HookingTrajectory {
    pub essential_degrees: Vec<usize>,
    pub checkpoints: Vec<HookingCheckpoint>,
    pub increment_min: f64,
    pub increment_max: f64,
    pub increment_sum: f64,
    /// Largest `|tracked - recomputed|` total activity over checkpoints.
    pub bookkeeping_error: f64,
    #[serde(skip)]
    pub network: Option<HookingNetwork>,
}

/// Grow one hooking network on stream `index` of `master_seed`.
pub fn simulate_hooking(
    params: &HookingParams,
    n: u64,
    checkpoints: &[u64],
    master_seed: u64,
    index: u64,
) -> Result<HookingTrajectory, ModelError> {
    params.validate()?;
    let essential = essential_degrees(params, params.r, CLOSURE_BUDGET)?;
    let mut cps: Vec<u64> = checkpoints.iter().copied().filter(|&c| c <= n).collect();
    cps.push(n);
    cps.sort_unstable();
    cps.dedup();
    Ok(run_one(params, &essential, n, &cps, master_seed, index, true))
}

fn run_one(
    params: &HookingParams,
    essential: &[usize],
    n: u64,
    cps: &[u64],
    master_seed: u64,
    index: u64,
    keep_network: bool,
) -> HookingTrajectory {
    let cum = cumulative(params);
    let mut rng = stream(master_seed, Domain::Hooking, index);
    let mut net = HookingNetwork::new(params.rho);
    let mut out = Vec::with_capacity(cps.len());
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    let mut bookkeeping_error: f64 = 0.0;
    let mut next = 0;
    loop {
        while next < cps.len() && cps[next] == net.steps {
            let exact = net.recomputed_activity(params.chi, params.rho);
            bookkeeping_error = bookkeeping_error.max((exact - net.activity).abs());
            out.push(HookingCheckpoint {
                n: net.steps,
                census: net.census(essential),
                activity: net.activity,
                vertices: net.degrees.len(),
                edges: net.edges.len(),
            });
            next += 1;
        }
        if net.steps >= n {
            break;
        }
        let inc = net.grow(params, &cum, &mut rng);
        lo = lo.min(inc);
        hi = hi.max(inc);
        sum += inc;
    }
    HookingTrajectory {
        essential_degrees: essential.to_vec(),
        checkpoints: out,
        increment_min: lo,
        increment_max: hi,
        increment_sum: sum,
        bookkeeping_error,
        network: keep_network.then_some(net),
    }
}

/// Censuses of many independent hooking runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HookingEnsemble {
    pub essential_degrees: Vec<usize>,
    pub checkpoints: Vec<u64>,
    pub reps: usize,
    pub master_seed: u64,
    /// `[rep][checkpoint][degree]`, flattened.
    pub census: Vec<f64>,
    /// `[rep][checkpoint]`, flattened.
    pub activity: Vec<f64>,
    pub increment_min: f64,
    pub increment_max: f64,
    pub max_bookkeeping_error: f64,
}

impl HookingEnsemble {
    fn r(&self) -> usize {
        self.essential_degrees.len()
    }

    /// Mean census vector at checkpoint index `cp`.
    pub fn census_mean(&self, cp: usize) -> Vec<f64> {
        let (r, c) = (self.r(), self.checkpoints.len());
        let mut mean = vec![0.0; r];
        for rep in 0..self.reps {
            let row = &self.census[(rep * c + cp) * r..(rep * c + cp + 1) * r];
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= self.reps as f64);
        mean
    }

    /// Mean per-step activity increment over the first `checkpoints[cp]` steps.
    pub fn mean_increment(&self, cp: usize, rho: f64) -> f64 {
        let c = self.checkpoints.len();
        let n = self.checkpoints[cp] as f64;
        let total: f64 = (0..self.reps).map(|rep| self.activity[rep * c + cp] - rho).sum();
        total / (self.reps as f64 * n)
    }

    pub fn checkpoint_index(&self, n: u64) -> Option<usize> {
        self.checkpoints.iter().position(|&c| c == n)
    }
}

pub fn run_hooking_ensemble(
    params: &HookingParams,
    n_max: u64,
    checkpoints: &[u64],
    reps: usize,
    master_seed: u64,
    threads: usize,
) -> Result<HookingEnsemble, ModelError> {
    params.validate()?;
    if reps == 0 {
        return Err(ModelError::InvalidParams("reps must be at least 1".into()));
    }
    let essential = essential_degrees(params, params.r, CLOSURE_BUDGET)?;
    let mut cps: Vec<u64> = checkpoints.to_vec();
    if cps.iter().any(|&c| c > n_max) {
        return Err(ModelError::InvalidParams(format!(
            "checkpoints must not exceed n_max = {n_max}"
        )));
    }
    cps.sort_unstable();
    cps.dedup();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| ModelError::InvalidParams(format!("thread pool: {e}")))?;
    let runs: Vec<HookingTrajectory> = pool.install(|| {
        (0..reps as u64)
            .into_par_iter()
            .map(|t| run_one(params, &essential, n_max, &cps, master_seed, t, false))
            .collect()
    });
    let mut census = Vec::with_capacity(reps * cps.len() * essential.len());
    let mut activity = Vec::with_capacity(reps * cps.len());
    let (mut lo, mut hi, mut err) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for run in &runs {
        for cp in &run.checkpoints {
            census.extend(cp.census.iter().map(|&c| c as f64));
            activity.push(cp.activity);
        }
        lo = lo.min(run.increment_min);
        hi = hi.max(run.increment_max);
        err = err.max(run.bookkeeping_error);
    }
    Ok(HookingEnsemble {
        essential_degrees: essential,
        checkpoints: cps,
        reps,
        master_seed,
        census,
        activity,
        increment_min: lo,
        increment_max: hi,
        max_bookkeeping_error: err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(blocks: Vec<BlockGraph>, chi: f64, rho: f64) -> HookingParams {
        HookingParams {
            blocks,
            chi,
            rho,
            r: 3,
        }
    }

    #[test]
    fn essential_degrees_single_edge() {
        let p = params(vec![BlockGraph::edge(1.0)], 1.0, 1.0);
        assert_eq!(essential_degrees(&p, 5, 1000).unwrap(), vec![1, 2, 3, 4, 5]);
        assert!(essential_degrees(&p, 0, 1000).unwrap().is_empty());
    }

    #[test]
    fn essential_degrees_triangle() {
        let p = params(vec![BlockGraph::triangle(1.0)], 1.0, 1.0);
        assert_eq!(essential_degrees(&p, 3, 1000).unwrap(), vec![2, 4, 6]);
    }

    #[test]
    fn star_hooked_at_centre_skips_hook_degree() {
        // Leaves enter with degree 1 and gain 3 per hooking; degree 3 only
        // ever belongs to the master hook.
        let star = BlockGraph::new(4, vec![[0, 1], [0, 2], [0, 3]], 0, 1.0);
        let p = params(vec![star], 1.0, 1.0);
        assert_eq!(essential_degrees(&p, 4, 1000).unwrap(), vec![1, 4, 7, 10]);
    }

    #[test]
    fn closure_budget_is_enforced() {
        let p = params(vec![BlockGraph::edge(1.0)], 1.0, 1.0);
        assert_eq!(
            essential_degrees(&p, 100, 10),
            Err(ModelError::ClosureBudgetExceeded { budget: 10 })
        );
    }

    #[test]
    fn balance_constants() {
        let tri = params(vec![BlockGraph::triangle(1.0)], 1.0, 0.0 + 1e-300);
        assert!((hooking_balance_constant(&tri).unwrap() - 6.0).abs() < 1e-12);
        let edge = params(vec![BlockGraph::edge(1.0)], 0.0, 1.0);
        assert_eq!(hooking_balance_constant(&edge).unwrap(), 1.0);
        let mixed = params(vec![BlockGraph::edge(0.5), BlockGraph::triangle(0.5)], 1.0, 1.0);
        assert_eq!(hooking_balance_constant(&mixed).unwrap(), 5.5);
    }

    #[test]
    fn invalid_collections() {
        let lonely = params(vec![BlockGraph::new(1, vec![], 0, 1.0)], 1.0, 1.0);
        assert!(matches!(lonely.validate(), Err(ModelError::InvalidParams(_))));
        let split = params(vec![BlockGraph::new(4, vec![[0, 1], [2, 3]], 0, 1.0)], 1.0, 1.0);
        assert!(matches!(split.validate(), Err(ModelError::InvalidParams(_))));
        let loop_ = params(vec![BlockGraph::new(2, vec![[0, 1], [1, 1]], 0, 1.0)], 1.0, 1.0);
        assert!(matches!(loop_.validate(), Err(ModelError::InvalidParams(_))));
        let short = params(vec![BlockGraph::edge(0.4), BlockGraph::triangle(0.5)], 1.0, 1.0);
        assert!(matches!(short.validate(), Err(ModelError::InvalidParams(_))));
        let neg_rho = params(vec![BlockGraph::edge(1.0)], 2.0, -1.0);
        assert!(matches!(
            neg_rho.validate(),
            Err(ModelError::NonpositiveWeight { vertex: 0, .. })
        ));
    }

    #[test]
    fn triangle_activity_grows_by_eight() {
        let p = params(vec![BlockGraph::triangle(1.0)], 1.0, 1.0);
        let run = simulate_hooking(&p, 300, &[100, 200], 5, 0).unwrap();
        assert_eq!(run.increment_min, 8.0);
        assert_eq!(run.increment_max, 8.0);
        let last = run.checkpoints.last().unwrap();
        assert_eq!(last.activity, 1.0 + 8.0 * 300.0);
        assert_eq!(last.vertices, 1 + 2 * 300);
        assert_eq!(last.edges, 3 * 300);
        assert_eq!(run.bookkeeping_error, 0.0);
        let net = run.network.unwrap();
        let total: u32 = net.degrees.iter().sum();
        assert_eq!(total as usize, 2 * net.edges.len());
    }

    #[test]
    fn mixed_increments_take_two_values() {
        let p = params(vec![BlockGraph::edge(0.5), BlockGraph::triangle(0.5)], 1.0, 1.0);
        let run = simulate_hooking(&p, 500, &[], 6, 0).unwrap();
        assert_eq!(run.increment_min, 3.0);
        assert_eq!(run.increment_max, 8.0);
        assert_eq!(
            run.checkpoints.last().unwrap().activity,
            1.0 + run.increment_sum
        );
    }

    #[test]
    fn uniform_attachment_leaf_count_grows_linearly() {
        // chi = 0: uniform latch, each step adds one leaf. Expected number of
        // leaves in a random recursive tree of n+1 vertices is about n/2.
        let p = params(vec![BlockGraph::edge(1.0)], 0.0, 1.0);
        let ens = run_hooking_ensemble(&p, 1000, &[500, 1000], 200, 3, 2).unwrap();
        let m500 = ens.census_mean(0)[0];
        let m1000 = ens.census_mean(1)[0];
        assert!((m500 / 500.0 - 0.5).abs() < 0.02, "{m500}");
        assert!((m1000 / 1000.0 - 0.5).abs() < 0.02, "{m1000}");
        assert!((ens.mean_increment(1, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ensemble_is_thread_independent() {
        let p = params(vec![BlockGraph::edge(0.3), BlockGraph::triangle(0.7)], 1.0, 0.5);
        let a = run_hooking_ensemble(&p, 200, &[50, 200], 64, 11, 1).unwrap();
        let b = run_hooking_ensemble(&p, 200, &[50, 200], 64, 11, 4).unwrap();
        assert_eq!(a, b);
    }
}

//! Many independent trajectories observed on a common checkpoint grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{thread_pool, SimError};
use crate::rng::{Domain, StreamSeed};
use crate::urn::{normalize_checkpoints, Urn};

/// Environment variable overriding the default thread budget.
pub const THREADS_ENV: &str = "POLYA_THREADS";

pub fn default_thread_budget() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub spec_name: String,
    pub q: usize,
    pub checkpoints: Vec<u64>,
    pub reps: usize,
    pub master_seed: u64,
    /// `[rep][checkpoint][type]`, flattened.
    pub x: Vec<f64>,
    /// `[rep][checkpoint]`, flattened.
    pub extinct: Vec<bool>,
}

impl Ensemble {
    pub fn state(&self, rep: usize, cp: usize) -> &[f64] {
        let c = self.checkpoints.len();
        let start = (rep * c + cp) * self.q;
        &self.x[start..start + self.q]
    }

    pub fn is_extinct(&self, rep: usize, cp: usize) -> bool {
        self.extinct[rep * self.checkpoints.len() + cp]
    }

    /// Indices of trajectories alive at checkpoint `cp`.
    pub fn survivors(&self, cp: usize) -> Vec<usize> {
        (0..self.reps).filter(|&r| !self.is_extinct(r, cp)).collect()
    }

    pub fn checkpoint_index(&self, n: u64) -> Option<usize> {
        self.checkpoints.iter().position(|&c| c == n)
    }

    /// Survivor compositions at checkpoint `cp`, one row per survivor.
    pub fn survivor_rows(&self, cp: usize) -> Vec<&[f64]> {
        self.survivors(cp)
            .into_iter()
            .map(|r| self.state(r, cp))
            .collect()
    }
}

/// Run `reps` trajectories; trajectory `t` uses stream `(master_seed, t)`.
///
/// The result does not depend on `threads`.
pub fn run_ensemble(
    urn: &Urn,
    n_max: u64,
    checkpoints: &[u64],
    reps: usize,
    master_seed: u64,
    threads: usize,
) -> Result<Ensemble, SimError> {
    if reps == 0 {
        return Err(SimError::InvalidInput("reps must be at least 1".into()));
    }
    let cps = normalize_checkpoints(checkpoints, n_max)?;
    let q = urn.q();
    let c = cps.len();
    let pool = thread_pool(threads)?;
    let runs: Vec<Result<(Vec<f64>, Vec<bool>), SimError>> = pool.install(|| {
        (0..reps as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = StreamSeed::new(master_seed, t).rng(Domain::Trajectory);
                let mut x = Vec::with_capacity(c * q);
                let mut ext = Vec::with_capacity(c);
                urn.run_visiting(n_max, &cps, &mut rng, |_, s| {
                    x.extend_from_slice(&s.x);
                    ext.push(s.extinct);
                })
                .map_err(|source| SimError::Trajectory { index: t, source })?;
                Ok((x, ext))
            })
            .collect()
    });
    let mut x = Vec::with_capacity(reps * c * q);
    let mut extinct = Vec::with_capacity(reps * c);
    for run in runs {
        let (xs, es) = run?;
        x.extend(xs);
        extinct.extend(es);
    }
    Ok(Ensemble {
        spec_name: urn.spec().name.clone(),
        q,
        checkpoints: cps,
        reps,
        master_seed,
        x,
        extinct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn polya_total_is_deterministic() {
        let urn = Urn::new(fixtures::polya()).unwrap();
        let ens = run_ensemble(&urn, 100, &[10, 100], 1000, 1, 2).unwrap();
        for r in 0..ens.reps {
            assert_eq!(ens.state(r, 1).iter().sum::<f64>(), 102.0);
            assert_eq!(ens.state(r, 0).iter().sum::<f64>(), 12.0);
        }
    }

    #[test]
    fn thread_budget_does_not_matter() {
        let urn = Urn::new(fixtures::freezing(2, 0.6)).unwrap();
        let a = run_ensemble(&urn, 200, &[0, 50, 200], 300, 9, 1).unwrap();
        let b = run_ensemble(&urn, 200, &[0, 50, 200], 300, 9, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn extinction_is_monotone() {
        let urn = Urn::new(fixtures::freezing(1, 0.6)).unwrap();
        let ens = run_ensemble(&urn, 256, &[1, 2, 4, 16, 64, 256], 2000, 4, 1).unwrap();
        for r in 0..ens.reps {
            for cp in 1..ens.checkpoints.len() {
                assert!(!ens.is_extinct(r, cp - 1) || ens.is_extinct(r, cp));
            }
        }
    }

    #[test]
    fn trajectory_matches_single_run() {
        let urn = Urn::new(fixtures::cyclic3()).unwrap();
        let ens = run_ensemble(&urn, 40, &[40], 5, 77, 1).unwrap();
        let single =
            crate::urn::run_trajectory(&urn, 40, &[40], StreamSeed::new(77, 3), false).unwrap();
        assert_eq!(ens.state(3, 0), single.checkpoints[0].1.x.as_slice());
    }
}

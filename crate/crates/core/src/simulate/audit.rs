//! Reconstruction of `X_n` from `F_{0,n} X_0 + sum_l F_{l,n} (Y_l + Z_l)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{thread_pool, SimError};
use crate::rng::StreamSeed;
use crate::spectral::{intensity_matrix, transition_product, transition_products_to, OmegaSeq};
use crate::urn::{dot, run_trajectory, Urn};

/// Residuals above this signal a bug rather than a data condition.
pub const RESIDUAL_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryAudit {
    pub index: u64,
    /// `(n, |X_n - reconstruction|_inf / max(1, |X_n|_inf))`.
    pub residuals: Vec<(u64, f64)>,
    pub max_residual: f64,
    pub max_abs_z: f64,
    /// `sum_{k <= l} a . Y_k` for `l = 1..n`.
    pub w_partial_sums: Vec<f64>,
    /// `(n, S_n - omega_n)`, `None` once extinct.
    pub s_minus_omega: Vec<(u64, Option<f64>)>,
    pub extinct_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub spec_name: String,
    pub n: u64,
    pub checkpoints: Vec<u64>,
    pub strictly_balanced: bool,
    pub max_residual: f64,
    pub max_abs_z: f64,
    pub trajectories: Vec<TrajectoryAudit>,
}

/// Transition products shared by every audited trajectory of one urn.
pub struct AuditPlan<'a> {
    urn: &'a Urn,
    n: u64,
    checkpoints: Vec<u64>,
    omega: OmegaSeq,
    strictly_balanced: bool,
    /// `F_{0,m}` per checkpoint, multiplied left to right.
    f0: Vec<DMatrix<f64>>,
    /// `F_{l,m}` for `l = 0..=m` per checkpoint.
    fs: Vec<Vec<DMatrix<f64>>>,
}

/// Powers of two up to `n`, plus `n`.
fn default_checkpoints(n: u64) -> Vec<u64> {
    let mut cps: Vec<u64> = (0..64).map(|k| 1u64 << k).take_while(|&c| c < n).collect();
    cps.push(n);
    cps
}

impl<'a> AuditPlan<'a> {
    pub fn new(urn: &'a Urn, n: u64) -> Result<Self, SimError> {
        let balance = urn.balance()?;
        let a = intensity_matrix(urn.spec())?.entries;
        let omega = OmegaSeq::new(urn.validation().initial_activity, balance.b);
        let checkpoints = default_checkpoints(n);
        let f0 = checkpoints
            .iter()
            .map(|&m| transition_product(&a, &omega, 0, m))
            .collect();
        let fs = checkpoints
            .iter()
            .map(|&m| transition_products_to(&a, &omega, m))
            .collect();
        Ok(Self {
            urn,
            n,
            checkpoints,
            omega,
            strictly_balanced: balance.strictly_balanced,
            f0,
            fs,
        })
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints
    }

    pub fn audit(&self, seed: StreamSeed) -> Result<TrajectoryAudit, SimError> {
        let traj = run_trajectory(self.urn, self.n, &self.checkpoints, seed, true)
            .map_err(|source| SimError::Trajectory {
                index: seed.index,
                source,
            })?;
        let audits = traj.audits.unwrap_or_default();
        let q = self.urn.q();
        let a = self.urn.activities();
        let mut max_abs_z: f64 = 0.0;
        let mut w = 0.0;
        let mut w_partial_sums = Vec::with_capacity(audits.len());
        let mut extinct_at = None;
        for (k, au) in audits.iter().enumerate() {
            let zmax = au.z.iter().fold(0.0f64, |m, z| m.max(z.abs()));
            if self.strictly_balanced && zmax != 0.0 {
                return Err(SimError::NoiseNotZero {
                    step: k as u64 + 1,
                    value: zmax,
                });
            }
            max_abs_z = max_abs_z.max(zmax);
            w += dot(a, &au.y);
            w_partial_sums.push(w);
            if extinct_at.is_none() && au.drawn_type.is_none() {
                extinct_at = Some(k as u64);
            }
        }
        let x0 = DVector::from_column_slice(&self.urn.spec().initial);
        let mut residuals = Vec::with_capacity(self.checkpoints.len());
        let mut s_minus_omega = Vec::with_capacity(self.checkpoints.len());
        let mut max_residual: f64 = 0.0;
        for (c, (m, state)) in traj.checkpoints.iter().enumerate() {
            let mut recon = &self.f0[c] * &x0;
            for (k, au) in audits.iter().take(*m as usize).enumerate() {
                let v = DVector::from_iterator(q, au.y.iter().zip(&au.z).map(|(y, z)| y + z));
                recon += &self.fs[c][k + 1] * v;
            }
            let x = DVector::from_column_slice(&state.x);
            let scale = x.amax().max(1.0);
            let r = (&x - recon).amax() / scale;
            if !(r <= RESIDUAL_LIMIT) {
                return Err(SimError::ResidualTooLarge { residual: r, n: *m });
            }
            max_residual = max_residual.max(r);
            residuals.push((*m, r));
            s_minus_omega.push((*m, (!state.extinct).then(|| state.s - self.omega.at(*m))));
        }
        Ok(TrajectoryAudit {
            index: seed.index,
            residuals,
            max_residual,
            max_abs_z,
            w_partial_sums,
            s_minus_omega,
            extinct_at,
        })
    }

    /// Audit trajectories `0..reps` of `master_seed`.
    pub fn audit_many(&self, reps: usize, master_seed: u64, threads: usize) -> Result<AuditReport, SimError> {
        let pool = thread_pool(threads)?;
        let runs: Vec<Result<TrajectoryAudit, SimError>> = pool.install(|| {
            (0..reps as u64)
                .into_par_iter()
                .map(|t| self.audit(StreamSeed::new(master_seed, t)))
                .collect()
        });
        let trajectories = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
        Ok(AuditReport {
            spec_name: self.urn.spec().name.clone(),
            n: self.n,
            checkpoints: self.checkpoints.clone(),
            strictly_balanced: self.strictly_balanced,
            max_residual: trajectories.iter().map(|t| t.max_residual).fold(0.0, f64::max),
            max_abs_z: trajectories.iter().map(|t| t.max_abs_z).fold(0.0, f64::max),
            trajectories,
        })
    }
}

/// Audit one trajectory of `urn` up to step `n`.
pub fn decomposition_audit(urn: &Urn, n: u64, seed: StreamSeed) -> Result<TrajectoryAudit, SimError> {
    AuditPlan::new(urn, n)?.audit(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn polya_has_no_noise() {
        let urn = Urn::new(fixtures::polya()).unwrap();
        let rep = AuditPlan::new(&urn, 50).unwrap().audit_many(20, 1, 1).unwrap();
        assert!(rep.max_residual <= 1e-10);
        assert_eq!(rep.max_abs_z, 0.0);
        for t in &rep.trajectories {
            assert!(t.s_minus_omega.iter().all(|(_, d)| *d == Some(0.0)));
        }
    }

    #[test]
    fn freezing_residual_is_roundoff() {
        let urn = Urn::new(fixtures::freezing(1, 0.75)).unwrap();
        let plan = AuditPlan::new(&urn, 200).unwrap();
        for t in 0..20 {
            let audit = plan.audit(StreamSeed::new(8, t)).unwrap();
            assert!(audit.max_residual <= 1e-8, "{}", audit.max_residual);
        }
    }

    #[test]
    fn path_extinct_at_first_step() {
        let urn = Urn::new(fixtures::freezing(1, 0.75)).unwrap();
        let plan = AuditPlan::new(&urn, 200).unwrap();
        let found = (0..200)
            .map(|t| plan.audit(StreamSeed::new(2, t)).unwrap())
            .find(|a| a.extinct_at == Some(1));
        let audit = found.expect("some path dies at the first step");
        assert!(audit.max_residual <= 1e-8);
        assert!(audit.s_minus_omega.last().unwrap().1.is_none());
    }

    #[test]
    fn default_grid() {
        assert_eq!(default_checkpoints(200), vec![1, 2, 4, 8, 16, 32, 64, 128, 200]);
        assert_eq!(default_checkpoints(4), vec![1, 2, 4]);
    }
}

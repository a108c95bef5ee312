//! Cross-trajectory means of the martingale differences `Y_l` and `a . Y_l`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{thread_pool, SimError};
use crate::rng::StreamSeed;
use crate::urn::{dot, run_trajectory, StepAudit, Urn};

/// A mean passes when it lies within this many standard errors of zero.
pub const Z_LIMIT: f64 = 4.0;
const CHUNK: usize = 1024;

/// Running sums of `Y_l`, `Y_l^2`, `W_l` and `W_l^2` per step.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleAccumulator {
    q: usize,
    steps: usize,
    count: usize,
    y_sum: Vec<f64>,
    y_sq: Vec<f64>,
    w_sum: Vec<f64>,
    w_sq: Vec<f64>,
}

impl MartingaleAccumulator {
    pub fn new(q: usize, steps: usize) -> Self {
        Self {
            q,
            steps,
            count: 0,
            y_sum: vec![0.0; q * steps],
            y_sq: vec![0.0; q * steps],
            w_sum: vec![0.0; steps],
            w_sq: vec![0.0; steps],
        }
    }

    pub fn push(&mut self, audits: &[StepAudit], activities: &[f64]) {
        for (l, au) in audits.iter().take(self.steps).enumerate() {
            for (i, y) in au.y.iter().enumerate() {
                self.y_sum[l * self.q + i] += y;
                self.y_sq[l * self.q + i] += y * y;
            }
            let w = dot(activities, &au.y);
            self.w_sum[l] += w;
            self.w_sq[l] += w * w;
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.y_sum.iter_mut().zip(&other.y_sum) {
            *a += b;
        }
        for (a, b) in self.y_sq.iter_mut().zip(&other.y_sq) {
            *a += b;
        }
        for (a, b) in self.w_sum.iter_mut().zip(&other.w_sum) {
            *a += b;
        }
        for (a, b) in self.w_sq.iter_mut().zip(&other.w_sq) {
            *a += b;
        }
        self.count += other.count;
    }

    /// `mean / stderr`, with the standard error floored at rounding level.
    fn z_score(&self, sum: f64, sq: f64) -> f64 {
        let n = self.count as f64;
        let mean = sum / n;
        let var = ((sq - n * mean * mean) / (n - 1.0).max(1.0)).max(0.0);
        let floor = 1e-12 * (1.0 + (sq / n).sqrt());
        mean / (var / n).sqrt().max(floor)
    }

    pub fn report(&self) -> MartingaleReport {
        let n = self.count as f64;
        let mut y_mean = Vec::with_capacity(self.steps);
        let mut y_z = Vec::with_capacity(self.steps);
        let mut w_mean = Vec::with_capacity(self.steps);
        let mut w_z = Vec::with_capacity(self.steps);
        for l in 0..self.steps {
            let r = l * self.q..(l + 1) * self.q;
            y_mean.push(self.y_sum[r.clone()].iter().map(|s| s / n).collect::<Vec<_>>());
            y_z.push(
                r.map(|k| self.z_score(self.y_sum[k], self.y_sq[k]))
                    .collect::<Vec<_>>(),
            );
            w_mean.push(self.w_sum[l] / n);
            w_z.push(self.z_score(self.w_sum[l], self.w_sq[l]));
        }
        let max_y_z = y_z.iter().flatten().fold(0.0f64, |m, z| m.max(z.abs()));
        let max_w_z = w_z.iter().fold(0.0f64, |m, z| m.max(z.abs()));
        MartingaleReport {
            trajectories: self.count,
            steps: self.steps,
            y_mean,
            y_z,
            w_mean,
            w_z,
            max_abs_y_z: max_y_z,
            max_abs_w_z: max_w_z,
            y_pass: max_y_z <= Z_LIMIT,
            w_pass: max_w_z <= Z_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub trajectories: usize,
    pub steps: usize,
    /// `[step][type]`.
    pub y_mean: Vec<Vec<f64>>,
    /// Means in units of their standard error.
    pub y_z: Vec<Vec<f64>>,
    pub w_mean: Vec<f64>,
    pub w_z: Vec<f64>,
    pub max_abs_y_z: f64,
    pub max_abs_w_z: f64,
    pub y_pass: bool,
    pub w_pass: bool,
}

impl MartingaleReport {
    pub fn passed(&self) -> bool {
        self.y_pass && self.w_pass
    }
}

/// Means of `Y_l` and `W_l` over `reps` audited trajectories up to step `n`.
pub fn martingale_check(
    urn: &Urn,
    n: u64,
    reps: usize,
    master_seed: u64,
    threads: usize,
) -> Result<MartingaleReport, SimError> {
    if reps < 2 {
        return Err(SimError::InvalidInput("need at least 2 trajectories".into()));
    }
    let q = urn.q();
    let pool = thread_pool(threads)?;
    let chunks: Vec<Result<MartingaleAccumulator, SimError>> = pool.install(|| {
        (0..reps.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut acc = MartingaleAccumulator::new(q, n as usize);
                for t in (c * CHUNK)..((c + 1) * CHUNK).min(reps) {
                    let traj = run_trajectory(urn, n, &[], StreamSeed::new(master_seed, t as u64), true)
                        .map_err(|source| SimError::Trajectory {
                            index: t as u64,
                            source,
                        })?;
                    acc.push(traj.audits.as_deref().unwrap_or_default(), urn.activities());
                }
                Ok(acc)
            })
            .collect()
    });
    let mut total = MartingaleAccumulator::new(q, n as usize);
    for chunk in chunks {
        total.merge(&chunk?);
    }
    Ok(total.report())
}

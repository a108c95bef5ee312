//! Moments of the composition conditioned on non-extinction.
//!
//! Every statistic is computed over survivors only. Standard errors come
//! from [`RESAMPLES`] bootstrap resamples of whole trajectories, so the
//! survivor count itself varies between resamples.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Ensemble, SimError, RESAMPLES};
use crate::rng::{stream, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpEstimate {
    pub p: f64,
    /// `E[|X - m|^p | survival]^(1/p) / sqrt(n)`.
    pub conditional: Estimate,
    /// `E[|X - m|^p 1_survival]^(1/p) / sqrt(n)`.
    pub indicator: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStats {
    pub n: u64,
    pub survivors: usize,
    pub extinction_rate: Estimate,
    pub mean: Vec<Estimate>,
    pub cov_over_n: Vec<Vec<f64>>,
    pub cov_over_n_stderr: Vec<Vec<f64>>,
    pub lp: Vec<LpEstimate>,
    /// `None` for coordinates that are constant among survivors.
    pub skewness: Vec<Option<Estimate>>,
    pub excess_kurtosis: Vec<Option<Estimate>>,
    /// `|stderr(mean)| / sqrt(n)`: size of the error from centering at the
    /// sample mean instead of the exact conditional mean.
    pub centering_bias: f64,
}

impl CheckpointStats {
    pub fn mean_values(&self) -> Vec<f64> {
        self.mean.iter().map(|e| e.value).collect()
    }

    pub fn lp_for(&self, p: f64) -> Option<&LpEstimate> {
        self.lp.iter().find(|l| l.p == p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub spec_name: String,
    pub reps: usize,
    pub master_seed: u64,
    pub resamples: usize,
    pub p_list: Vec<f64>,
    pub checkpoints: Vec<CheckpointStats>,
}

impl EstimatorReport {
    pub fn at(&self, n: u64) -> Option<&CheckpointStats> {
        self.checkpoints.iter().find(|c| c.n == n)
    }
}

/// Point statistics under integer weights (all ones for the sample itself).
struct Weighted {
    survivors: f64,
    extinction: f64,
    mean: Vec<f64>,
    cov_over_n: Vec<f64>,
    lp_cond: Vec<f64>,
    lp_ind: Vec<f64>,
    skew: Vec<Option<f64>>,
    kurt: Vec<Option<f64>>,
}

fn weighted_stats(
    xs: &[f64],
    alive: &[bool],
    weights: Option<&[u32]>,
    q: usize,
    n: u64,
    p_list: &[f64],
) -> Weighted {
    let reps = alive.len();
    let w = |r: usize| weights.map_or(1.0, |ws| ws[r] as f64);
    let mut total = 0.0;
    let mut sw = 0.0;
    let mut mean = vec![0.0; q];
    for r in 0..reps {
        let wr = w(r);
        total += wr;
        if !alive[r] || wr == 0.0 {
            continue;
        }
        sw += wr;
        for (m, x) in mean.iter_mut().zip(&xs[r * q..(r + 1) * q]) {
            *m += wr * x;
        }
    }
    if sw > 0.0 {
        mean.iter_mut().for_each(|m| *m /= sw);
    }
    let nn = (n.max(1)) as f64;
    let mut cov = vec![0.0; q * q];
    let mut m2 = vec![0.0; q];
    let mut m3 = vec![0.0; q];
    let mut m4 = vec![0.0; q];
    let mut lp = vec![0.0; p_list.len()];
    let mut dev = vec![0.0; q];
    for r in 0..reps {
        let wr = w(r);
        if !alive[r] || wr == 0.0 {
            continue;
        }
        let mut sq = 0.0;
        for i in 0..q {
            dev[i] = xs[r * q + i] - mean[i];
            sq += dev[i] * dev[i];
        }
        for i in 0..q {
            let d = dev[i];
            let d2 = d * d;
            m2[i] += wr * d2;
            m3[i] += wr * d2 * d;
            m4[i] += wr * d2 * d2;
            for j in i..q {
                cov[i * q + j] += wr * d * dev[j];
            }
        }
        let norm = sq.sqrt();
        for (acc, &p) in lp.iter_mut().zip(p_list) {
            *acc += wr * norm.powf(p);
        }
    }
    let denom = (sw - 1.0).max(1.0);
    for i in 0..q {
        for j in i..q {
            let v = cov[i * q + j] / denom / nn;
            cov[i * q + j] = v;
            cov[j * q + i] = v;
        }
    }
    let mut skew = vec![None; q];
    let mut kurt = vec![None; q];
    for i in 0..q {
        let v = m2[i] / sw;
        if sw > 0.0 && v.is_finite() && v.sqrt() > 1e-12 * mean[i].abs().max(1.0) {
            skew[i] = Some(m3[i] / sw / v.powf(1.5));
            kurt[i] = Some(m4[i] / sw / (v * v) - 3.0);
        }
    }
    let lp_cond = lp
        .iter()
        .zip(p_list)
        .map(|(s, &p)| (s / sw.max(1.0)).powf(1.0 / p) / nn.sqrt())
        .collect();
    let lp_ind = lp
        .iter()
        .zip(p_list)
        .map(|(s, &p)| (s / total).powf(1.0 / p) / nn.sqrt())
        .collect();
    Weighted {
        survivors: sw,
        extinction: 1.0 - sw / total,
        mean,
        cov_over_n: cov,
        lp_cond,
        lp_ind,
        skew,
        kurt,
    }
}

/// Bootstrap weights: multinomial counts of `len` draws over `len` items.
pub(crate) fn resample_counts<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<u32> {
    let mut counts = vec![0u32; len];
    for _ in 0..len {
        counts[rng.random_range(0..len)] += 1;
    }
    counts
}

pub(crate) fn std_dev(values: &[f64]) -> f64 {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() < 2 {
        return f64::NAN;
    }
    let m = finite.iter().sum::<f64>() / finite.len() as f64;
    let ss: f64 = finite.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (finite.len() - 1) as f64).sqrt()
}

fn gather(ens: &Ensemble, cp: usize) -> (Vec<f64>, Vec<bool>) {
    let mut xs = Vec::with_capacity(ens.reps * ens.q);
    let mut alive = Vec::with_capacity(ens.reps);
    for r in 0..ens.reps {
        xs.extend_from_slice(ens.state(r, cp));
        alive.push(!ens.is_extinct(r, cp));
    }
    (xs, alive)
}

fn checkpoint_stats(ens: &Ensemble, cp: usize, p_list: &[f64]) -> Result<CheckpointStats, SimError> {
    let q = ens.q;
    let n = ens.checkpoints[cp];
    let (xs, alive) = gather(ens, cp);
    let point = weighted_stats(&xs, &alive, None, q, n, p_list);
    let survivors = point.survivors as usize;
    if survivors < 2 {
        return Err(SimError::TooFewSurvivors {
            n,
            survivors,
            required: 2,
        });
    }
    let boots: Vec<Weighted> = (0..RESAMPLES)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(
                ens.master_seed,
                Domain::Resample,
                (cp * RESAMPLES + b) as u64,
            );
            let counts = resample_counts(ens.reps, &mut rng);
            weighted_stats(&xs, &alive, Some(&counts), q, n, p_list)
        })
        .collect();
    let se = |f: &dyn Fn(&Weighted) -> f64| std_dev(&boots.iter().map(f).collect::<Vec<_>>());
    let mean: Vec<Estimate> = (0..q)
        .map(|i| Estimate {
            value: point.mean[i],
            stderr: se(&|w| w.mean[i]),
        })
        .collect();
    let cov_over_n = (0..q)
        .map(|i| (0..q).map(|j| point.cov_over_n[i * q + j]).collect())
        .collect();
    let cov_over_n_stderr = (0..q)
        .map(|i| (0..q).map(|j| se(&|w| w.cov_over_n[i * q + j])).collect())
        .collect();
    let lp = p_list
        .iter()
        .enumerate()
        .map(|(k, &p)| LpEstimate {
            p,
            conditional: Estimate {
                value: point.lp_cond[k],
                stderr: se(&|w| w.lp_cond[k]),
            },
            indicator: Estimate {
                value: point.lp_ind[k],
                stderr: se(&|w| w.lp_ind[k]),
            },
        })
        .collect();
    let shape = |pick: &dyn Fn(&Weighted) -> Option<f64>| -> Option<Estimate> {
        pick(&point).map(|value| Estimate {
            value,
            stderr: std_dev(&boots.iter().filter_map(pick).collect::<Vec<_>>()),
        })
    };
    let skewness = (0..q).map(|i| shape(&|w| w.skew[i])).collect();
    let excess_kurtosis = (0..q).map(|i| shape(&|w| w.kurt[i])).collect();
    let centering_bias = mean.iter().map(|e| e.stderr * e.stderr).sum::<f64>().sqrt()
        / (n.max(1) as f64).sqrt();
    Ok(CheckpointStats {
        n,
        survivors,
        extinction_rate: Estimate {
            value: point.extinction,
            stderr: se(&|w| w.extinction),
        },
        mean,
        cov_over_n,
        cov_over_n_stderr,
        lp,
        skewness,
        excess_kurtosis,
        centering_bias,
    })
}

/// Estimators at every checkpoint of `ens`.
pub fn conditional_stats(ens: &Ensemble, p_list: &[f64]) -> Result<EstimatorReport, SimError> {
    if let Some(&bad) = p_list.iter().find(|&&p| !(p >= 2.0 && p.is_finite())) {
        return Err(SimError::InvalidInput(format!("moment order {bad} must be >= 2")));
    }
    let checkpoints = (0..ens.checkpoints.len())
        .map(|cp| checkpoint_stats(ens, cp, p_list))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EstimatorReport {
        spec_name: ens.spec_name.clone(),
        reps: ens.reps,
        master_seed: ens.master_seed,
        resamples: RESAMPLES,
        p_list: p_list.to_vec(),
        checkpoints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::simulate::run_ensemble;
    use crate::urn::Urn;
    use nalgebra::DMatrix;

    #[test]
    fn polya_has_no_extinction() {
        let urn = Urn::new(fixtures::polya()).unwrap();
        let ens = run_ensemble(&urn, 50, &[10, 50], 500, 3, 1).unwrap();
        let rep = conditional_stats(&ens, &[2.0]).unwrap();
        for cp in &rep.checkpoints {
            assert_eq!(cp.survivors, 500);
            assert_eq!(cp.extinction_rate.value, 0.0);
            let total: f64 = cp.mean_values().iter().sum();
            assert!((total - (2.0 + cp.n as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let urn = Urn::new(fixtures::freezing(2, 0.75)).unwrap();
        let ens = run_ensemble(&urn, 128, &[32, 128], 2000, 5, 1).unwrap();
        let rep = conditional_stats(&ens, &[2.0, 4.0]).unwrap();
        for cp in &rep.checkpoints {
            let q = cp.cov_over_n.len();
            let m = DMatrix::from_fn(q, q, |i, j| cp.cov_over_n[i][j]);
            assert!((&m - m.transpose()).amax() < 1e-12);
            let eig = m.symmetric_eigenvalues();
            assert!(eig.min() > -1e-10 * (1.0 + eig.max()));
        }
    }

    #[test]
    fn known_sample_moments() {
        // Two survivors at (0) and (2), one extinct trajectory.
        let xs = [0.0, 2.0, 0.0];
        let alive = [true, true, false];
        let w = weighted_stats(&xs, &alive, None, 1, 4, &[2.0]);
        assert_eq!(w.survivors, 2.0);
        assert!((w.extinction - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(w.mean, vec![1.0]);
        assert_eq!(w.cov_over_n, vec![0.5]);
        assert!((w.lp_cond[0] - 0.5).abs() < 1e-15);
        assert!((w.lp_ind[0] - (2.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(w.skew[0], Some(0.0));
        assert_eq!(w.kurt[0], Some(-2.0));
    }

    #[test]
    fn too_few_survivors() {
        let urn = Urn::new(fixtures::freezing(1, 0.6)).unwrap();
        let ens = run_ensemble(&urn, 4, &[4], 1, 1, 1).unwrap();
        assert!(matches!(
            conditional_stats(&ens, &[2.0]),
            Err(SimError::TooFewSurvivors { .. })
        ));
    }
}

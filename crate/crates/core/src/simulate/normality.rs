//! Shape of the standardized survivor sample, coordinate by coordinate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use super::estimate::{resample_counts, std_dev};
use super::{Ensemble, Estimate, SimError, RESAMPLES};
use crate::rng::{stream, Domain};

/// Minimum number of survivors for the diagnostics.
pub const MIN_SURVIVORS: usize = 1000;
/// Checkpoints below this are flagged as pre-asymptotic.
pub const PRE_ASYMPTOTIC_N: u64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordNormality {
    pub coord: usize,
    /// Constant among survivors; no shape statistics.
    pub degenerate: bool,
    pub skewness: Option<Estimate>,
    pub excess_kurtosis: Option<Estimate>,
    /// Kolmogorov distance to the normal law with the sample mean and variance.
    pub ks_distance: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub n: u64,
    pub survivors: usize,
    pub pre_asymptotic: bool,
    pub coords: Vec<CoordNormality>,
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Skewness, excess kurtosis and Kolmogorov distance of a sorted sample
/// under integer weights.
fn shape(sorted: &[f64], weights: Option<&[u32]>) -> Option<(f64, f64, f64)> {
    let w = |i: usize| weights.map_or(1.0, |ws| ws[i] as f64);
    let total: f64 = (0..sorted.len()).map(w).sum();
    let mean = sorted.iter().enumerate().map(|(i, x)| w(i) * x).sum::<f64>() / total;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for (i, x) in sorted.iter().enumerate() {
        let d = x - mean;
        let d2 = d * d;
        m2 += w(i) * d2;
        m3 += w(i) * d2 * d;
        m4 += w(i) * d2 * d2;
    }
    let var = m2 / total;
    if !(var.sqrt() > 1e-12 * mean.abs().max(1.0)) {
        return None;
    }
    let sd = var.sqrt();
    let skew = m3 / total / (var * sd);
    let kurt = m4 / total / (var * var) - 3.0;
    let mut below = 0.0;
    let mut ks: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // Ties share one jump of the empirical distribution function.
        let mut j = i;
        let mut mass = 0.0;
        while j < sorted.len() && sorted[j] == sorted[i] {
            mass += w(j);
            j += 1;
        }
        let f = normal_cdf((sorted[i] - mean) / sd);
        ks = ks.max((f - below / total).abs()).max((below + mass) / total - f);
        below += mass;
        i = j;
    }
    Some((skew, kurt, ks))
}

/// Diagnostics for arbitrary columns of observations.
pub fn diagnose_columns(columns: &[Vec<f64>], n: u64, seed: u64) -> Result<NormalityReport, SimError> {
    let survivors = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != survivors) {
        return Err(SimError::InvalidInput("columns differ in length".into()));
    }
    if survivors < MIN_SURVIVORS {
        return Err(SimError::TooFewSurvivors {
            n,
            survivors,
            required: MIN_SURVIVORS,
        });
    }
    let coords = columns
        .iter()
        .enumerate()
        .map(|(coord, col)| {
            let mut sorted = col.clone();
            sorted.sort_by(f64::total_cmp);
            let Some((skew, kurt, ks)) = shape(&sorted, None) else {
                return CoordNormality {
                    coord,
                    degenerate: true,
                    skewness: None,
                    excess_kurtosis: None,
                    ks_distance: None,
                };
            };
            let boots: Vec<Option<(f64, f64, f64)>> = (0..RESAMPLES)
                .into_par_iter()
                .map(|b| {
                    let index = (coord * RESAMPLES + b) as u64;
                    let mut rng = stream(seed, Domain::Resample, index);
                    let counts = resample_counts(sorted.len(), &mut rng);
                    shape(&sorted, Some(&counts))
                })
                .collect();
            let se = |f: fn(&(f64, f64, f64)) -> f64| {
                std_dev(&boots.iter().flatten().map(f).collect::<Vec<_>>())
            };
            CoordNormality {
                coord,
                degenerate: false,
                skewness: Some(Estimate {
                    value: skew,
                    stderr: se(|s| s.0),
                }),
                excess_kurtosis: Some(Estimate {
                    value: kurt,
                    stderr: se(|s| s.1),
                }),
                ks_distance: Some(Estimate {
                    value: ks,
                    stderr: se(|s| s.2),
                }),
            }
        })
        .collect();
    Ok(NormalityReport {
        n,
        survivors,
        pre_asymptotic: n < PRE_ASYMPTOTIC_N,
        coords,
    })
}

/// Diagnostics of the survivors of `ens` at step `n`.
pub fn normality_diagnostics(ens: &Ensemble, n: u64) -> Result<NormalityReport, SimError> {
    let cp = ens
        .checkpoint_index(n)
        .ok_or_else(|| SimError::InvalidInput(format!("n = {n} is not a checkpoint")))?;
    let rows = ens.survivor_rows(cp);
    let columns: Vec<Vec<f64>> = (0..ens.q)
        .map(|i| rows.iter().map(|r| r[i]).collect())
        .collect();
    let seed = ens.master_seed ^ (cp as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    diagnose_columns(&columns, n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn normal_samples_pass_tightly() {
        let mut rng = stream(3, Domain::Fit, 0);
        let col: Vec<f64> = (0..100_000)
            .map(|_| 5.0 + 2.0 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        let rep = diagnose_columns(&[col], 4096, 1).unwrap();
        let c = &rep.coords[0];
        assert!(c.skewness.unwrap().value.abs() < 0.03);
        assert!(c.excess_kurtosis.unwrap().value.abs() < 0.06);
        assert!(c.ks_distance.unwrap().value < 0.01);
        assert!(c.skewness.unwrap().stderr > 0.0);
        assert!(!rep.pre_asymptotic);
    }

    #[test]
    fn uniform_samples_have_negative_kurtosis() {
        let col: Vec<f64> = (0..2000).map(|i| i as f64).collect();
        let rep = diagnose_columns(&[col], 1, 1).unwrap();
        let k = rep.coords[0].excess_kurtosis.unwrap().value;
        assert!((k + 1.2).abs() < 0.01, "{k}");
        assert!(rep.pre_asymptotic);
    }

    #[test]
    fn constant_column_is_degenerate() {
        let rep = diagnose_columns(&[vec![3.0; 1500]], 100, 1).unwrap();
        assert!(rep.coords[0].degenerate);
    }

    #[test]
    fn small_samples_are_rejected() {
        assert!(matches!(
            diagnose_columns(&[vec![1.0, 2.0]], 100, 1),
            Err(SimError::TooFewSurvivors { .. })
        ));
    }
}

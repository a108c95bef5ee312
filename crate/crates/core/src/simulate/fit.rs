//! Log-log growth exponents.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{SimError, RESAMPLES};
use crate::rng::{stream, Domain};

/// Minimum number of points in a fit.
pub const MIN_POINTS: usize = 5;
/// Minimum ratio `n_max / n_min` of a fit.
pub const MIN_SPAN: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub n: u64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    /// Central 95% of slopes refitted on resampled values.
    pub ci: [f64; 2],
    pub points: Vec<GrowthPoint>,
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Slope of `log value` against `log n`.
///
/// The interval refits on values perturbed by normal noise with each point's
/// standard error.
pub fn growth_exponent_fit(points: &[GrowthPoint], seed: u64) -> Result<GrowthFit, SimError> {
    if points.len() < MIN_POINTS {
        return Err(SimError::InsufficientRange(format!(
            "{} points, need {MIN_POINTS}",
            points.len()
        )));
    }
    if points.iter().any(|p| p.n == 0 || !(p.value > 0.0)) {
        return Err(SimError::InsufficientRange(
            "every point needs n > 0 and a positive value".into(),
        ));
    }
    let n_min = points.iter().map(|p| p.n).min().unwrap_or(1) as f64;
    let n_max = points.iter().map(|p| p.n).max().unwrap_or(1) as f64;
    if n_max / n_min < MIN_SPAN {
        return Err(SimError::InsufficientRange(format!(
            "n spans {n_min}..{n_max}, need a factor of {MIN_SPAN}"
        )));
    }
    let x: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.value.ln()).collect();
    let (slope, intercept) = least_squares(&x, &y);
    let mut rng = stream(seed, Domain::Fit, 0);
    let mut slopes: Vec<f64> = (0..RESAMPLES)
        .map(|_| {
            let yb: Vec<f64> = points
                .iter()
                .map(|p| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (p.value + z * p.stderr.max(0.0)).max(f64::MIN_POSITIVE).ln()
                })
                .collect();
            least_squares(&x, &yb).0
        })
        .collect();
    slopes.sort_by(f64::total_cmp);
    Ok(GrowthFit {
        slope,
        intercept,
        ci: [percentile(&slopes, 0.025), percentile(&slopes, 0.975)],
        points: points.to_vec(),
    })
}

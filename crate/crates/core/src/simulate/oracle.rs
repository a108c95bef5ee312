//! Exact law of `X_n` by expanding every draw and replacement outcome.
//!
//! Probabilities, activities and compositions are exact rationals in the
//! binary values of the urn's floats.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::urn::{validate_spec, UrnError, UrnSpec};

/// Default cap on the number of distinct states at any step.
pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

fn exact(x: f64) -> Result<BigRational, SimError> {
    BigRational::from_float(x)
        .ok_or_else(|| SimError::Urn(UrnError::MalformedSpec(format!("non-finite value {x}"))))
}

fn approx(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleState {
    pub x: Vec<f64>,
    pub x_exact: Vec<String>,
    pub prob: f64,
    pub prob_exact: String,
    pub extinct: bool,
    /// Probability given survival; `None` for extinct states.
    pub conditional_prob: Option<f64>,
    pub conditional_prob_exact: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub spec_name: String,
    pub n: u64,
    pub states: Vec<OracleState>,
    pub survival_prob: f64,
    pub survival_prob_exact: String,
    /// `E[X_n | survival]`; `None` when extinction is certain.
    pub conditional_mean: Option<Vec<f64>>,
    pub conditional_mean_exact: Option<Vec<String>>,
    /// `E[S_n | survival]`.
    pub conditional_total_activity: Option<f64>,
    pub conditional_total_activity_exact: Option<String>,
    pub unconditional_mean: Vec<f64>,
}

impl OracleReport {
    /// Conditional law as `(x, probability)` pairs of surviving states.
    pub fn conditional_law(&self) -> Vec<(Vec<f64>, f64)> {
        self.states
            .iter()
            .filter_map(|s| s.conditional_prob.map(|p| (s.x.clone(), p)))
            .collect()
    }
}

/// Exact distribution of `X_n` over all outcome sequences.
pub fn enumeration_oracle(spec: &UrnSpec, n: u64, node_budget: usize) -> Result<OracleReport, SimError> {
    validate_spec(spec)?;
    let q = spec.q;
    let a: Vec<BigRational> = spec.activities.iter().map(|&v| exact(v)).collect::<Result<_, _>>()?;
    let laws: Vec<Vec<(BigRational, Vec<BigRational>)>> = spec
        .replacements
        .iter()
        .map(|law| {
            law.iter()
                .filter(|o| o.prob > 0.0)
                .map(|o| {
                    Ok((
                        exact(o.prob)?,
                        o.delta.iter().map(|&d| exact(d)).collect::<Result<Vec<_>, SimError>>()?,
                    ))
                })
                .collect::<Result<Vec<_>, SimError>>()
        })
        .collect::<Result<_, _>>()?;
    let total = |x: &[BigRational]| -> BigRational {
        a.iter().zip(x).fold(BigRational::zero(), |acc, (ai, xi)| acc + ai * xi)
    };
    let x0: Vec<BigRational> = spec.initial.iter().map(|&v| exact(v)).collect::<Result<_, _>>()?;
    let mut frontier: BTreeMap<Vec<BigRational>, BigRational> = BTreeMap::new();
    frontier.insert(x0, num_traits::One::one());
    for level in 1..=n {
        let mut next: BTreeMap<Vec<BigRational>, BigRational> = BTreeMap::new();
        for (x, prob) in frontier {
            let s = total(&x);
            if s.is_zero() {
                *next.entry(x).or_insert_with(BigRational::zero) += prob;
                continue;
            }
            for ty in 0..q {
                let weight = &a[ty] * &x[ty];
                if weight.is_zero() {
                    continue;
                }
                let pick = &prob * &weight / &s;
                for (p_out, delta) in &laws[ty] {
                    let mut y = x.clone();
                    for (yi, di) in y.iter_mut().zip(delta) {
                        *yi += di;
                    }
                    if let Some((j, v)) = y.iter().enumerate().find(|(_, v)| v < &&BigRational::zero()) {
                        return Err(SimError::Urn(UrnError::TenabilityViolation {
                            step: level - 1,
                            component: j,
                            value: approx(v),
                        }));
                    }
                    *next.entry(y).or_insert_with(BigRational::zero) += &pick * p_out;
                }
            }
            if next.len() > node_budget {
                return Err(SimError::StateSpaceTooLarge {
                    budget: node_budget,
                    level,
                });
            }
        }
        frontier = next;
    }
    let survival: BigRational = frontier
        .iter()
        .filter(|(x, _)| !total(x).is_zero())
        .fold(BigRational::zero(), |acc, (_, p)| acc + p);
    let mut states = Vec::with_capacity(frontier.len());
    let mut cond_mean = vec![BigRational::zero(); q];
    let mut cond_s = BigRational::zero();
    let mut mean = vec![BigRational::zero(); q];
    for (x, prob) in &frontier {
        let s = total(x);
        let extinct = s.is_zero();
        for i in 0..q {
            mean[i] += prob * &x[i];
        }
        let cond = (!extinct && !survival.is_zero()).then(|| prob / &survival);
        if let Some(c) = &cond {
            for i in 0..q {
                cond_mean[i] += c * &x[i];
            }
            cond_s += c * &s;
        }
        states.push(OracleState {
            x: x.iter().map(approx).collect(),
            x_exact: x.iter().map(ToString::to_string).collect(),
            prob: approx(prob),
            prob_exact: prob.to_string(),
            extinct,
            conditional_prob: cond.as_ref().map(approx),
            conditional_prob_exact: cond.as_ref().map(ToString::to_string),
        });
    }
    let alive = !survival.is_zero();
    Ok(OracleReport {
        spec_name: spec.name.clone(),
        n,
        states,
        survival_prob: approx(&survival),
        survival_prob_exact: survival.to_string(),
        conditional_mean: alive.then(|| cond_mean.iter().map(approx).collect()),
        conditional_mean_exact: alive.then(|| cond_mean.iter().map(ToString::to_string).collect()),
        conditional_total_activity: alive.then(|| approx(&cond_s)),
        conditional_total_activity_exact: alive.then(|| cond_s.to_string()),
        unconditional_mean: mean.iter().map(approx).collect(),
    })
}

//! Urn descriptions and single-trajectory dynamics.
//!
//! Types are indexed from 0 throughout the API. A ball of type `i` is drawn
//! with probability `a_i x_i / S` where `S = a . x` is the total activity;
//! once `S` reaches zero the urn is extinct and never moves again.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{Domain, StreamSeed};

/// Tolerance on the sum of replacement probabilities for each type.
pub const PROB_TOL: f64 = 1e-12;
/// Negative counts above `-TENABILITY_TOL` are clamped to zero.
pub const TENABILITY_TOL: f64 = 1e-12;
/// Default tolerance for agreement of `a . E[xi_i]` across types.
pub const BALANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum UrnError {
    #[error("malformed spec: {0}")]
    MalformedSpec(String),
    #[error("not balanced in expectation: type {ty} has a.E[xi] = {value}, type {reference_ty} has {reference}")]
    NotBalancedInExpectation {
        ty: usize,
        value: f64,
        reference_ty: usize,
        reference: f64,
    },
    #[error("balance constant b = {0} is not positive")]
    NonpositiveB(f64),
    #[error("tenability violated at step {step}: component {component} would become {value}")]
    TenabilityViolation {
        step: u64,
        component: usize,
        value: f64,
    },
    #[error("invalid checkpoints: {0}")]
    InvalidCheckpoints(String),
}

/// One point of a finite replacement law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outcome {
    pub prob: f64,
    pub delta: Vec<f64>,
}

impl Outcome {
    pub fn new(prob: f64, delta: Vec<f64>) -> Self {
        Self { prob, delta }
    }
}

/// Declarative description of a generalized Pólya urn.
///
/// `replacements[i]` is the finite support of the replacement vector added
/// when a ball of type `i` is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UrnSpec {
    pub name: String,
    pub q: usize,
    pub activities: Vec<f64>,
    pub initial: Vec<f64>,
    pub replacements: Vec<Vec<Outcome>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub q: usize,
    /// `a . X_0`, strictly positive for a valid spec.
    pub initial_activity: f64,
    /// Largest `|sum of probs - 1|` over all types.
    pub max_normalization_error: f64,
    /// Types that can never be drawn.
    pub zero_activity_types: Vec<usize>,
}

/// Static checks. Tenability is only checked while running.
pub fn validate_spec(spec: &UrnSpec) -> Result<ValidationReport, UrnError> {
    let bad = |msg: String| Err(UrnError::MalformedSpec(msg));
    let q = spec.q;
    if q < 2 {
        return bad(format!("q = {q}, need at least 2 types"));
    }
    if spec.activities.len() != q {
        return bad(format!("{} activities for q = {q}", spec.activities.len()));
    }
    if spec.initial.len() != q {
        return bad(format!("initial composition has length {}", spec.initial.len()));
    }
    if spec.replacements.len() != q {
        return bad(format!("{} replacement laws for q = {q}", spec.replacements.len()));
    }
    for (i, &a) in spec.activities.iter().enumerate() {
        if !a.is_finite() || a < 0.0 {
            return bad(format!("activity of type {i} is {a}"));
        }
    }
    for (i, &x) in spec.initial.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return bad(format!("initial count of type {i} is {x}"));
        }
    }
    let mut max_err: f64 = 0.0;
    for (i, law) in spec.replacements.iter().enumerate() {
        if law.is_empty() {
            return bad(format!("type {i} has an empty replacement support"));
        }
        let mut total = 0.0;
        for (k, o) in law.iter().enumerate() {
            if !o.prob.is_finite() || o.prob < 0.0 {
                return bad(format!("type {i} outcome {k} has probability {}", o.prob));
            }
            if o.delta.len() != q {
                return bad(format!(
                    "type {i} outcome {k} has a delta of length {}",
                    o.delta.len()
                ));
            }
            if o.delta.iter().any(|d| !d.is_finite()) {
                return bad(format!("type {i} outcome {k} has a non-finite delta"));
            }
            total += o.prob;
        }
        let err = (total - 1.0).abs();
        if err > PROB_TOL {
            return bad(format!("type {i} probabilities sum to {total}"));
        }
        max_err = max_err.max(err);
    }
    let initial_activity = dot(&spec.activities, &spec.initial);
    if initial_activity <= 0.0 {
        return bad(format!("a . X0 = {initial_activity}, must be positive"));
    }
    let zero_activity_types = (0..q).filter(|&i| spec.activities[i] == 0.0).collect();
    Ok(ValidationReport {
        q,
        initial_activity,
        max_normalization_error: max_err,
        zero_activity_types,
    })
}

/// Balance constant `b` and whether the urn is balanced pathwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Balance {
    pub b: f64,
    /// `a . xi_i` is the same constant on every support point of every
    /// drawable type, so the noise part `Z` of the decomposition vanishes.
    pub strictly_balanced: bool,
    /// `a . E[xi_i]` per type, `None` for zero-activity types.
    pub per_type: Vec<Option<f64>>,
}

pub fn balance_constant(spec: &UrnSpec, tol: f64) -> Result<Balance, UrnError> {
    validate_spec(spec)?;
    let a = &spec.activities;
    let per_type: Vec<Option<f64>> = spec
        .replacements
        .iter()
        .zip(a)
        .map(|(law, &ai)| {
            (ai > 0.0).then(|| law.iter().map(|o| o.prob * dot(a, &o.delta)).sum())
        })
        .collect();
    let (reference_ty, reference) = per_type
        .iter()
        .enumerate()
        .find_map(|(i, v)| v.map(|v| (i, v)))
        .ok_or_else(|| UrnError::MalformedSpec("no type has positive activity".into()))?;
    let scale = reference.abs().max(1.0);
    for (ty, v) in per_type.iter().enumerate() {
        if let Some(value) = *v {
            if (value - reference).abs() > tol * scale {
                return Err(UrnError::NotBalancedInExpectation {
                    ty,
                    value,
                    reference_ty,
                    reference,
                });
            }
        }
    }
    let b = reference;
    if b <= 0.0 {
        return Err(UrnError::NonpositiveB(b));
    }
    let strictly_balanced = spec.replacements.iter().zip(a).all(|(law, &ai)| {
        ai == 0.0
            || law
                .iter()
                .filter(|o| o.prob > 0.0)
                .all(|o| (dot(a, &o.delta) - b).abs() <= tol * scale)
    });
    Ok(Balance {
        b,
        strictly_balanced,
        per_type,
    })
}

/// Composition of the urn after `n` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrnState {
    pub n: u64,
    pub x: Vec<f64>,
    /// Cached total activity `a . x`.
    pub s: f64,
    /// `S_k = 0` for some `k <= n`.
    pub extinct: bool,
}

/// Per-step record of the increment and its martingale/noise split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepAudit {
    pub drawn_type: Option<usize>,
    pub delta: Vec<f64>,
    /// Martingale difference `delta - E[delta | F]`.
    pub y: Vec<f64>,
    /// Noise `((omega - S) / omega) E[delta | F]`.
    pub z: Vec<f64>,
    /// Deterministic normalizer `a . X_0 + (n-1) b` for the step producing `X_n`.
    pub omega: f64,
}

/// A validated urn with the tables needed to step it quickly.
#[derive(Debug, Clone)]
pub struct Urn {
    spec: UrnSpec,
    report: ValidationReport,
    balance: Result<Balance, UrnError>,
    /// Row-major `A_{ij} = a_j E[xi_{j,i}]`.
    intensity: Vec<f64>,
    cum_probs: Vec<Vec<f64>>,
    activity_delta: Vec<Vec<f64>>,
}

impl Urn {
    pub fn new(spec: UrnSpec) -> Result<Self, UrnError> {
        let report = validate_spec(&spec)?;
        let balance = balance_constant(&spec, BALANCE_TOL);
        let q = spec.q;
        let mut intensity = vec![0.0; q * q];
        for j in 0..q {
            let aj = spec.activities[j];
            if aj == 0.0 {
                continue;
            }
            for o in &spec.replacements[j] {
                for i in 0..q {
                    intensity[i * q + j] += aj * o.prob * o.delta[i];
                }
            }
        }
        let cum_probs = spec
            .replacements
            .iter()
            .map(|law| {
                let mut acc = 0.0;
                law.iter()
                    .map(|o| {
                        acc += o.prob;
                        acc
                    })
                    .collect()
            })
            .collect();
        let activity_delta = spec
            .replacements
            .iter()
            .map(|law| law.iter().map(|o| dot(&spec.activities, &o.delta)).collect())
            .collect();
        Ok(Self {
            spec,
            report,
            balance,
            intensity,
            cum_probs,
            activity_delta,
        })
    }

    pub fn spec(&self) -> &UrnSpec {
        &self.spec
    }

    pub fn q(&self) -> usize {
        self.spec.q
    }

    pub fn activities(&self) -> &[f64] {
        &self.spec.activities
    }

    pub fn validation(&self) -> &ValidationReport {
        &self.report
    }

    /// Balance under the default tolerance.
    pub fn balance(&self) -> Result<&Balance, UrnError> {
        self.balance.as_ref().map_err(Clone::clone)
    }

    /// Row-major intensity matrix entries.
    pub fn intensity_entries(&self) -> &[f64] {
        &self.intensity
    }

    /// `omega_n = a . X_0 + n b`.
    pub fn omega(&self, n: u64) -> Result<f64, UrnError> {
        let b = self.balance()?.b;
        Ok(self.report.initial_activity + n as f64 * b)
    }

    pub fn initial_state(&self) -> UrnState {
        UrnState {
            n: 0,
            x: self.spec.initial.clone(),
            s: self.report.initial_activity,
            extinct: false,
        }
    }

    /// Selection probabilities `a_i x_i / S`; empty when extinct.
    pub fn selection_probabilities(&self, state: &UrnState) -> Vec<f64> {
        if state.extinct {
            return Vec::new();
        }
        let total = dot(&self.spec.activities, &state.x);
        self.spec
            .activities
            .iter()
            .zip(&state.x)
            .map(|(a, x)| a * x / total)
            .collect()
    }

    /// `E[delta | state] = A x / S`, zero when extinct.
    pub fn conditional_mean(&self, state: &UrnState) -> Vec<f64> {
        let q = self.q();
        if state.extinct {
            return vec![0.0; q];
        }
        self.apply_intensity(&state.x)
            .into_iter()
            .map(|v| v / state.s)
            .collect()
    }

    pub fn apply_intensity(&self, x: &[f64]) -> Vec<f64> {
        let q = self.q();
        (0..q)
            .map(|i| (0..q).map(|j| self.intensity[i * q + j] * x[j]).sum())
            .collect()
    }

    /// Advance `state` by one step in place; returns the drawn type.
    pub fn advance<R: Rng + ?Sized>(
        &self,
        state: &mut UrnState,
        rng: &mut R,
    ) -> Result<Option<usize>, UrnError> {
        let drawn = self.draw(state, rng);
        state.n += 1;
        if let Some((ty, k)) = drawn {
            self.apply(state, ty, k)?;
        }
        Ok(drawn.map(|(ty, _)| ty))
    }

    /// Advance in place and return the audit record for the step.
    pub fn advance_audited<R: Rng + ?Sized>(
        &self,
        state: &mut UrnState,
        rng: &mut R,
    ) -> Result<StepAudit, UrnError> {
        let q = self.q();
        let omega = self.omega(state.n)?;
        let cond_mean = self.conditional_mean(state);
        let s_prev = if state.extinct { 0.0 } else { state.s };
        let drawn = self.draw(state, rng);
        state.n += 1;
        let delta = match drawn {
            Some((ty, k)) => {
                self.apply(state, ty, k)?;
                self.spec.replacements[ty][k].delta.clone()
            }
            None => vec![0.0; q],
        };
        let noise_factor = (omega - s_prev) / omega;
        let y = delta.iter().zip(&cond_mean).map(|(d, m)| d - m).collect();
        let z = cond_mean.iter().map(|m| noise_factor * m).collect();
        Ok(StepAudit {
            drawn_type: drawn.map(|(ty, _)| ty),
            delta,
            y,
            z,
            omega,
        })
    }

    /// One step as a pure function of the input state.
    pub fn step<R: Rng + ?Sized>(
        &self,
        state: &UrnState,
        rng: &mut R,
    ) -> Result<(UrnState, StepAudit), UrnError> {
        let mut next = state.clone();
        let audit = self.advance_audited(&mut next, rng)?;
        Ok((next, audit))
    }

    fn draw<R: Rng + ?Sized>(&self, state: &UrnState, rng: &mut R) -> Option<(usize, usize)> {
        if state.extinct {
            return None;
        }
        let a = &self.spec.activities;
        let u = rng.random::<f64>() * state.s;
        let mut acc = 0.0;
        let mut last = None;
        let mut ty = None;
        for (i, (ai, xi)) in a.iter().zip(&state.x).enumerate() {
            let w = ai * xi;
            if w > 0.0 {
                acc += w;
                last = Some(i);
                if u < acc {
                    ty = Some(i);
                    break;
                }
            }
        }
        let ty = ty.or(last)?;
        let cum = &self.cum_probs[ty];
        if cum.len() == 1 {
            return Some((ty, 0));
        }
        let v = rng.random::<f64>();
        let law = &self.spec.replacements[ty];
        let k = cum
            .iter()
            .position(|&c| v < c)
            .or_else(|| law.iter().rposition(|o| o.prob > 0.0))
            .unwrap_or(0);
        Some((ty, k))
    }

    fn apply(&self, state: &mut UrnState, ty: usize, k: usize) -> Result<(), UrnError> {
        let delta = &self.spec.replacements[ty][k].delta;
        let mut clamped = false;
        for (j, (x, d)) in state.x.iter_mut().zip(delta).enumerate() {
            *x += d;
            if *x < 0.0 {
                if *x >= -TENABILITY_TOL {
                    *x = 0.0;
                    clamped = true;
                } else {
                    return Err(UrnError::TenabilityViolation {
                        step: state.n,
                        component: j,
                        value: *x,
                    });
                }
            }
        }
        let s_prev = state.s;
        state.s = if clamped {
            dot(&self.spec.activities, &state.x)
        } else {
            s_prev + self.activity_delta[ty][k]
        };
        if state.s <= TENABILITY_TOL * s_prev.max(1.0) {
            state.s = 0.0;
            state.extinct = true;
        }
        Ok(())
    }

    /// Run to `n_max`, calling `visit` at each requested checkpoint.
    /// `checkpoints` must already be sorted, deduplicated and `<= n_max`.
    pub(crate) fn run_visiting<R: Rng + ?Sized>(
        &self,
        n_max: u64,
        checkpoints: &[u64],
        rng: &mut R,
        mut visit: impl FnMut(usize, &UrnState),
    ) -> Result<UrnState, UrnError> {
        let mut state = self.initial_state();
        let mut next_cp = 0;
        loop {
            while next_cp < checkpoints.len() && checkpoints[next_cp] == state.n {
                visit(next_cp, &state);
                next_cp += 1;
            }
            if state.n >= n_max {
                break;
            }
            if state.extinct {
                // Frozen from here on; fast-forward.
                while next_cp < checkpoints.len() {
                    state.n = checkpoints[next_cp];
                    visit(next_cp, &state);
                    next_cp += 1;
                }
                state.n = n_max;
                break;
            }
            self.advance(&mut state, rng)?;
        }
        Ok(state)
    }
}

/// Checkpoint grid normalized to sorted unique values within `[0, n_max]`.
pub fn normalize_checkpoints(checkpoints: &[u64], n_max: u64) -> Result<Vec<u64>, UrnError> {
    if let Some(&bad) = checkpoints.iter().find(|&&c| c > n_max) {
        return Err(UrnError::InvalidCheckpoints(format!(
            "checkpoint {bad} exceeds n_max = {n_max}"
        )));
    }
    let mut cps = checkpoints.to_vec();
    cps.sort_unstable();
    cps.dedup();
    Ok(cps)
}

/// States at checkpoints and optionally every step's audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub spec_name: String,
    pub seed: StreamSeed,
    pub checkpoints: Vec<(u64, UrnState)>,
    pub audits: Option<Vec<StepAudit>>,
}

pub fn run_trajectory(
    urn: &Urn,
    n_max: u64,
    checkpoints: &[u64],
    seed: StreamSeed,
    capture_audit: bool,
) -> Result<Trajectory, UrnError> {
    let cps = normalize_checkpoints(checkpoints, n_max)?;
    let mut rng = seed.rng(Domain::Trajectory);
    let mut out = Vec::with_capacity(cps.len());
    let audits = if capture_audit {
        let mut state = urn.initial_state();
        let mut audits = Vec::with_capacity(n_max as usize);
        let mut next_cp = 0;
        loop {
            while next_cp < cps.len() && cps[next_cp] == state.n {
                out.push((state.n, state.clone()));
                next_cp += 1;
            }
            if state.n >= n_max {
                break;
            }
            audits.push(urn.advance_audited(&mut state, &mut rng)?);
        }
        Some(audits)
    } else {
        urn.run_visiting(n_max, &cps, &mut rng, |_, s| out.push((s.n, s.clone())))?;
        None
    };
    Ok(Trajectory {
        spec_name: urn.spec().name.clone(),
        seed,
        checkpoints: out,
        audits,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::models::freezing::{freezing_urn_spec, FreezingParams};
    use crate::rng::stream;

    fn freezing(k: usize, p: f64) -> UrnSpec {
        freezing_urn_spec(&FreezingParams::new(k, p).unwrap()).unwrap()
    }

    #[test]
    fn polya_is_valid_and_strictly_balanced() {
        let spec = fixtures::polya();
        let report = validate_spec(&spec).unwrap();
        assert!(report.zero_activity_types.is_empty());
        assert_eq!(report.initial_activity, 2.0);
        let bal = balance_constant(&spec, 1e-12).unwrap();
        assert_eq!(bal.b, 1.0);
        assert!(bal.strictly_balanced);
    }

    #[test]
    fn freezing_flags_frozen_types() {
        let spec = freezing(1, 0.75);
        let report = validate_spec(&spec).unwrap();
        // Types 2 and 4 in one-based numbering.
        assert_eq!(report.zero_activity_types, vec![1, 3]);
        let bal = balance_constant(&spec, 1e-12).unwrap();
        assert!((bal.b - 0.5).abs() < 1e-15);
        assert!(!bal.strictly_balanced);
    }

    #[test]
    fn unnormalized_probabilities_are_rejected() {
        let mut spec = fixtures::polya();
        spec.replacements[0] = vec![Outcome::new(0.9, vec![1.0, 0.0])];
        assert!(matches!(validate_spec(&spec), Err(UrnError::MalformedSpec(_))));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut spec = fixtures::polya();
        spec.replacements[1][0].delta.push(0.0);
        assert!(matches!(validate_spec(&spec), Err(UrnError::MalformedSpec(_))));
        let mut spec = fixtures::polya();
        spec.activities.pop();
        assert!(matches!(validate_spec(&spec), Err(UrnError::MalformedSpec(_))));
    }

    #[test]
    fn negative_probability_is_rejected() {
        let mut spec = fixtures::polya();
        spec.replacements[0] = vec![
            Outcome::new(1.5, vec![1.0, 0.0]),
            Outcome::new(-0.5, vec![0.0, 1.0]),
        ];
        assert!(matches!(validate_spec(&spec), Err(UrnError::MalformedSpec(_))));
    }

    #[test]
    fn disagreeing_types_are_not_balanced() {
        // Type 0 gains 0.5 activity on average, type 2 only 0.4.
        let mut spec = freezing(1, 0.75);
        spec.replacements[2] = vec![
            Outcome::new(0.3, vec![0.0, 0.0, -1.0, 1.0]),
            Outcome::new(0.7, vec![1.0, 0.0, 0.0, 0.0]),
        ];
        let err = balance_constant(&spec, 1e-9).unwrap_err();
        assert!(matches!(err, UrnError::NotBalancedInExpectation { ty: 2, .. }));
    }

    #[test]
    fn negative_drift_is_rejected() {
        let spec = UrnSpec {
            name: "dying".into(),
            q: 2,
            activities: vec![1.0, 0.0],
            initial: vec![1.0, 0.0],
            replacements: vec![
                vec![
                    Outcome::new(0.6, vec![-1.0, 1.0]),
                    Outcome::new(0.4, vec![1.0, 0.0]),
                ],
                vec![Outcome::new(1.0, vec![0.0, 0.0])],
            ],
        };
        let err = balance_constant(&spec, 1e-9).unwrap_err();
        assert!(matches!(err, UrnError::NonpositiveB(b) if (b + 0.2).abs() < 1e-12));
    }

    #[test]
    fn polya_step_is_symmetric() {
        let urn = Urn::new(fixtures::polya()).unwrap();
        let start = urn.initial_state();
        assert_eq!(urn.selection_probabilities(&start), vec![0.5, 0.5]);
        let mut rng = stream(1, Domain::Trajectory, 0);
        let mut first = 0;
        for _ in 0..4000 {
            let (next, audit) = urn.step(&start, &mut rng).unwrap();
            match audit.drawn_type {
                Some(0) => {
                    first += 1;
                    assert_eq!(next.x, vec![2.0, 1.0]);
                }
                Some(1) => assert_eq!(next.x, vec![1.0, 2.0]),
                other => panic!("unexpected draw {other:?}"),
            }
            assert_eq!(next.s, 3.0);
        }
        // Binomial(4000, 1/2) within 4 standard deviations.
        assert!((first as f64 - 2000.0).abs() < 4.0 * 31.7);
    }

    #[test]
    fn freezing_first_step_outcomes() {
        let urn = Urn::new(freezing(1, 0.75)).unwrap();
        let start = urn.initial_state();
        let mut rng = stream(2, Domain::Trajectory, 0);
        let mut froze = 0;
        for _ in 0..4000 {
            let (next, _) = urn.step(&start, &mut rng).unwrap();
            if next.x == vec![0.0, 1.0, 0.0, 0.0] {
                assert!(next.extinct);
                assert_eq!(next.s, 0.0);
                froze += 1;
            } else {
                assert_eq!(next.x, vec![1.0, 0.0, 1.0, 0.0]);
                assert!(!next.extinct);
            }
        }
        // Binomial(4000, 1/4): sd ~ 27.4.
        assert!((froze as f64 - 1000.0).abs() < 4.0 * 27.4);
    }

    #[test]
    fn extinct_state_does_not_move() {
        let urn = Urn::new(freezing(1, 0.75)).unwrap();
        let dead = UrnState {
            n: 1,
            x: vec![0.0, 1.0, 0.0, 0.0],
            s: 0.0,
            extinct: true,
        };
        let mut rng = stream(3, Domain::Trajectory, 0);
        let (next, audit) = urn.step(&dead, &mut rng).unwrap();
        assert_eq!(next.x, dead.x);
        assert_eq!(next.n, 2);
        assert!(next.extinct);
        assert_eq!(audit.drawn_type, None);
        assert!(audit.delta.iter().chain(&audit.y).chain(&audit.z).all(|&v| v == 0.0));
        assert!(urn.selection_probabilities(&dead).is_empty());
    }

    #[test]
    fn removing_missing_balls_is_a_tenability_violation() {
        let spec = UrnSpec {
            name: "untenable".into(),
            q: 2,
            activities: vec![1.0, 1.0],
            initial: vec![1.0, 0.0],
            replacements: vec![
                vec![Outcome::new(1.0, vec![1.0, -1.0])],
                vec![Outcome::new(1.0, vec![0.0, 1.0])],
            ],
        };
        let urn = Urn::new(spec).unwrap();
        let mut state = urn.initial_state();
        let mut rng = stream(4, Domain::Trajectory, 0);
        let err = urn.advance(&mut state, &mut rng).unwrap_err();
        assert!(matches!(err, UrnError::TenabilityViolation { component: 1, .. }));
    }

    #[test]
    fn tiny_negative_counts_are_clamped() {
        let spec = UrnSpec {
            name: "roundoff".into(),
            q: 2,
            activities: vec![1.0, 1.0],
            initial: vec![1.0, 1e-13],
            replacements: vec![
                vec![Outcome::new(1.0, vec![1.0, -2e-13])],
                vec![Outcome::new(1.0, vec![0.0, 1.0])],
            ],
        };
        let urn = Urn::new(spec).unwrap();
        let mut state = urn.initial_state();
        let mut rng = stream(5, Domain::Trajectory, 0);
        // Type 1 carries ~1e-13 of the activity; draw until type 0 is chosen.
        loop {
            let drawn = urn.advance(&mut state, &mut rng).unwrap();
            if drawn == Some(0) {
                break;
            }
        }
        assert!(state.x.iter().all(|&x| x >= 0.0));
        assert!((state.s - dot(urn.activities(), &state.x)).abs() < 1e-12);
    }

    #[test]
    fn polya_total_activity_after_100_steps() {
        let urn = Urn::new(fixtures::polya()).unwrap();
        let traj = run_trajectory(&urn, 100, &[0, 50, 100], StreamSeed::new(9, 0), false).unwrap();
        let (n, last) = traj.checkpoints.last().unwrap();
        assert_eq!(*n, 100);
        assert_eq!(last.s, 102.0);
        assert_eq!(last.x.iter().sum::<f64>(), 102.0);
    }

    #[test]
    fn trajectory_is_reproducible_and_audits_agree() {
        let urn = Urn::new(freezing(2, 0.75)).unwrap();
        let seed = StreamSeed::new(42, 3);
        let plain = run_trajectory(&urn, 60, &[60, 10, 30, 10], seed, false).unwrap();
        let audited = run_trajectory(&urn, 60, &[10, 30, 60], seed, true).unwrap();
        assert_eq!(plain.checkpoints, audited.checkpoints);
        assert_eq!(audited.audits.as_ref().unwrap().len(), 60);
        let ns: Vec<u64> = plain.checkpoints.iter().map(|(n, _)| *n).collect();
        assert_eq!(ns, vec![10, 30, 60]);
    }

    #[test]
    fn checkpoint_beyond_horizon_is_rejected() {
        let urn = Urn::new(fixtures::polya()).unwrap();
        let err = run_trajectory(&urn, 10, &[11], StreamSeed::new(0, 0), false).unwrap_err();
        assert!(matches!(err, UrnError::InvalidCheckpoints(_)));
    }

    #[test]
    fn audit_identity_holds_per_step() {
        for spec in [freezing(1, 0.75), fixtures::cyclic3(), fixtures::critical2()] {
            let urn = Urn::new(spec).unwrap();
            let traj = run_trajectory(&urn, 80, &[], StreamSeed::new(5, 1), true).unwrap();
            let mut state = urn.initial_state();
            for audit in traj.audits.unwrap() {
                let ax = urn.apply_intensity(&state.x);
                for i in 0..urn.q() {
                    let lhs = audit.y[i] + audit.z[i];
                    let rhs = audit.delta[i] - ax[i] / audit.omega;
                    assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
                }
                for (x, d) in state.x.iter_mut().zip(&audit.delta) {
                    *x += d;
                }
                state.n += 1;
                state.s = dot(urn.activities(), &state.x);
                state.extinct |= state.s == 0.0;
            }
        }
    }
}

//! Acceptance suite for the core claims.
//!
//! Each criterion returns a pass/fail verdict with a one-line detail. The
//! `ci` budget runs Monte Carlo criteria at a tenth of the `desk`
//! replications and widens the purely statistical bands by `sqrt(10)`.

use std::cell::OnceCell;
use std::fmt;
use std::time::Instant;

use nalgebra::{Complex, DMatrix};
use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fixtures;
use crate::models::freezing::{enumerate_freezing_tree, freezing_v1_closed_form, FreezingParams};
use crate::models::hooking::{run_hooking_ensemble, simulate_hooking, BlockGraph, HookingParams};
use crate::rng::{stream, Domain};
use crate::simulate::{
    conditional_stats, enumeration_oracle, growth_exponent_fit, normality_diagnostics, run_ensemble,
    AuditPlan, Ensemble, EstimatorReport, GrowthPoint,
};
use crate::simulate::io::write_ensemble_csv;
use crate::simulate::oracle::DEFAULT_NODE_BUDGET;
use crate::spectral::cluster::spectral_norm;
use crate::spectral::{analyze, eigen_structure, eigenvalue_multiset, projection_diagnostics, ProjectionDiagnostics, Tolerances};
use crate::urn::Urn;
use crate::Error;

/// Criteria in the suite.
pub const CRITERIA: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

const SEED: u64 = 20_240_611;
/// Independent seeds behind the standard-error scaling ratio.
const SE_PAIRS: u64 = 5;
/// Checkpoints `2^6..=2^13` of the shared freezing ensemble.
const GROWTH_GRID: [u64; 8] = [64, 128, 256, 512, 1024, 2048, 4096, 8192];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Budget {
    Desk,
    Ci,
}

impl Budget {
    /// Replications for the large ensembles.
    pub fn reps(self) -> usize {
        match self {
            Budget::Desk => 100_000,
            Budget::Ci => 10_000,
        }
    }

    /// Replications for the hooking ensembles.
    pub fn hooking_reps(self) -> usize {
        self.reps() / 10
    }

    /// Widening factor for statistical tolerance bands.
    pub fn band(self) -> f64 {
        match self {
            Budget::Desk => 1.0,
            Budget::Ci => 10f64.sqrt(),
        }
    }
}

impl std::str::FromStr for Budget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "desk" => Ok(Budget::Desk),
            "ci" => Ok(Budget::Ci),
            other => Err(format!("unknown budget {other:?}, expected desk or ci")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {} {}: {} ({:.1} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub budget: Budget,
    pub threads: usize,
    pub criteria: Vec<CriterionResult>,
}

impl AcceptanceReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

pub fn criterion_name(id: u8) -> &'static str {
    match id {
        1 => "spectral exactness (freezing)",
        2 => "projection identities",
        3 => "decomposition audit",
        4 => "oracle agreement",
        5 => "extinction probability",
        6 => "first-order normalization",
        7 => "growth exponent and moment convergence",
        8 => "normality diagnostics",
        9 => "hooking networks",
        10 => "determinism and scaling",
        _ => "unknown",
    }
}

type Verdict = Result<(bool, String), Error>;

struct Suite {
    budget: Budget,
    threads: usize,
    freezing: OnceCell<Result<(Ensemble, EstimatorReport), String>>,
}

/// Run the selected criteria (all of them when `only` is empty), calling
/// `progress` after each one.
pub fn run_suite(
    budget: Budget,
    threads: usize,
    only: &[u8],
    mut progress: impl FnMut(&CriterionResult),
) -> AcceptanceReport {
    let suite = Suite {
        budget,
        threads: threads.max(1),
        freezing: OnceCell::new(),
    };
    let mut criteria = Vec::new();
    for id in CRITERIA {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let verdict = match id {
            1 => spectral_exactness(),
            2 => projection_identities(),
            3 => decomposition_audit(suite.threads),
            4 => oracle_agreement(&suite),
            5 => extinction_probability(&suite),
            6 => first_order(&suite),
            7 => growth_exponent(&suite),
            8 => normality(&suite),
            9 => hooking(&suite),
            _ => determinism(&suite),
        };
        let (passed, detail) = verdict.unwrap_or_else(|e| (false, format!("error: {e}")));
        let result = CriterionResult {
            id,
            name: criterion_name(id).to_string(),
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        };
        progress(&result);
        criteria.push(result);
    }
    AcceptanceReport {
        budget,
        threads: suite.threads,
        criteria,
    }
}

fn freezing_k1() -> Result<Urn, Error> {
    Ok(Urn::new(fixtures::freezing(1, 0.75))?)
}

impl Suite {
    fn freezing(&self) -> Result<&(Ensemble, EstimatorReport), Error> {
        let cell = self.freezing.get_or_init(|| {
            let run = || -> Result<(Ensemble, EstimatorReport), Error> {
                let urn = freezing_k1()?;
                let ens = run_ensemble(&urn, 8192, &GROWTH_GRID, self.budget.reps(), SEED, self.threads)?;
                let rep = conditional_stats(&ens, &[2.0, 4.0])?;
                Ok((ens, rep))
            };
            run().map_err(|e| e.to_string())
        });
        cell.as_ref()
            .map_err(|e| Error::Sim(crate::SimError::InvalidInput(format!("shared freezing ensemble: {e}"))))
    }
}

fn spectral_exactness() -> Verdict {
    let tol = Tolerances::default();
    let mut worst_eig: f64 = 0.0;
    let mut worst_v1: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    for k in fixtures::FREEZING_GRID_K {
        for p in fixtures::FREEZING_GRID_P {
            let rep = analyze(&fixtures::freezing(k, p), &tol)?;
            let mut got: Vec<Complex<f64>> = eigenvalue_multiset(&rep.clusters);
            let mut want: Vec<Complex<f64>> = std::iter::once(2.0 * p - 1.0)
                .chain(std::iter::repeat_n(0.0, k + 1))
                .chain(std::iter::repeat_n(-1.0, k))
                .map(|re| Complex::new(re, 0.0))
                .collect();
            if got.len() != want.len() {
                return Ok((false, format!("K={k} p={p}: {} eigenvalues, want {}", got.len(), want.len())));
            }
            let key = |z: &Complex<f64>, w: &Complex<f64>| z.re.total_cmp(&w.re).then(z.im.total_cmp(&w.im));
            got.sort_by(key);
            want.sort_by(key);
            for (g, w) in got.iter().zip(&want) {
                worst_eig = worst_eig.max((g - w).norm());
            }
            let principal = rep.principal.as_ref().ok_or_else(|| {
                Error::Sim(crate::SimError::InvalidInput(format!("K={k} p={p}: no principal pair")))
            })?;
            let closed = freezing_v1_closed_form(&FreezingParams::new(k, p)?)?;
            for (g, w) in principal.v1.iter().zip(&closed) {
                worst_v1 = worst_v1.max((g - w).abs());
            }
            let a_dot_v: f64 = fixtures::freezing(k, p)
                .activities
                .iter()
                .zip(&principal.v1)
                .map(|(a, v)| a * v)
                .sum();
            worst_norm = worst_norm.max((a_dot_v - 1.0).abs());
        }
    }
    let ok = worst_eig <= 1e-8 && worst_v1 <= 1e-8 && worst_norm <= 1e-12;
    Ok((
        ok,
        format!(
            "max eigenvalue error {worst_eig:.2e} (<= 1e-8), max v1 error {worst_v1:.2e} (<= 1e-8), max |a.v1 - 1| {worst_norm:.2e} (<= 1e-12)"
        ),
    ))
}

/// Identity residuals against their tolerances; `None` when all hold.
fn identity_failure(d: &ProjectionDiagnostics, q: usize, tol: &Tolerances) -> Option<String> {
    let band = tol.proj_tol * q as f64;
    let checks = [
        ("sum - I", d.sum_minus_identity, band),
        ("P^2 - P", d.idempotence, band),
        ("P_l P_m", d.cross_products, band),
        ("AP - PA", d.commutator, band * d.a_norm.max(1.0)),
        ("N^(nu+1)", d.nilpotent_tail, tol.rank_tol),
    ];
    checks
        .iter()
        .find(|(_, v, limit)| !(v <= limit))
        .map(|(name, v, limit)| format!("{name} = {v:.2e} > {limit:.2e}"))
}

/// `V D V^-1` with a random well-conditioned `V` and a separated spectrum
/// containing `pairs` complex conjugate pairs.
pub fn random_diagonalizable(q: usize, pairs: usize, index: u64) -> (DMatrix<f64>, Vec<Complex<f64>>) {
    let mut rng = stream(SEED, Domain::Fit, 1_000_000 + index);
    let eig = loop {
        let mut eig = Vec::with_capacity(q);
        for _ in 0..pairs.min(q / 2) {
            let z = Complex::new(rng.random_range(-3.0..3.0), rng.random_range(0.5..2.0));
            eig.push(z);
            eig.push(z.conj());
        }
        while eig.len() < q {
            eig.push(Complex::new(rng.random_range(-3.0..3.0), 0.0));
        }
        let separated = eig
            .iter()
            .enumerate()
            .all(|(i, a)| eig[i + 1..].iter().all(|b| (a - b).norm() >= 0.2));
        if separated {
            break eig;
        }
    };
    let mut d = DMatrix::zeros(q, q);
    let mut i = 0;
    while i < q {
        let z = eig[i];
        if z.im != 0.0 {
            d[(i, i)] = z.re;
            d[(i + 1, i + 1)] = z.re;
            d[(i, i + 1)] = z.im;
            d[(i + 1, i)] = -z.im;
            i += 2;
        } else {
            d[(i, i)] = z.re;
            i += 1;
        }
    }
    let v = loop {
        let v = DMatrix::from_fn(q, q, |r, c| {
            rng.random_range(-1.0..1.0) + if r == c { 2.0 } else { 0.0 }
        });
        let sv = v.clone().singular_values();
        if sv.min() > 0.2 {
            break v;
        }
    };
    let inv = v.clone().try_inverse().expect("well-conditioned by construction");
    (&v * d * inv, eig)
}

fn projection_identities() -> Verdict {
    let tol = Tolerances::default();
    let specs = fixtures::builtin_specs();
    for spec in &specs {
        let rep = analyze(spec, &tol)?;
        if let Some(msg) = identity_failure(&rep.diagnostics, spec.q, &tol) {
            return Ok((false, format!("{}: {msg}", spec.name)));
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let (a, eig) = random_diagonalizable(6, (i % 3) as usize, i);
        let clusters = eigen_structure(&a, &tol)?;
        if clusters.len() != 6 || clusters.iter().any(|c| c.nilpotent_index != 0) {
            return Ok((false, format!("random fixture {i}: expected 6 simple eigenvalues")));
        }
        for z in &eig {
            let nearest = clusters.iter().map(|c| (c.value - z).norm()).fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest);
        }
        let d = projection_diagnostics(&a, &clusters, &tol);
        if let Some(msg) = identity_failure(&d, 6, &tol) {
            return Ok((false, format!("random fixture {i}: {msg}")));
        }
    }
    Ok((
        true,
        format!(
            "{} built-in specs and 100 random 6x6 fixtures within tolerance; max eigenvalue error {worst:.1e}",
            specs.len()
        ),
    ))
}

fn decomposition_audit(threads: usize) -> Verdict {
    let mut worst: f64 = 0.0;
    for spec in fixtures::builtin_specs() {
        let name = spec.name.clone();
        let urn = Urn::new(spec)?;
        let rep = AuditPlan::new(&urn, 200)?.audit_many(100, SEED, threads)?;
        if !(rep.max_residual <= 1e-8) {
            return Ok((false, format!("{name}: residual {:.2e} > 1e-8", rep.max_residual)));
        }
        if name == "polya" && rep.max_abs_z != 0.0 {
            return Ok((false, format!("polya: max |Z| = {:e}", rep.max_abs_z)));
        }
        worst = worst.max(rep.max_residual);
    }
    Ok((true, format!("max residual {worst:.2e} (<= 1e-8); polya max |Z| = 0")))
}

fn oracle_agreement(suite: &Suite) -> Verdict {
    let spec = fixtures::freezing(1, 0.75);
    let params = FreezingParams::new(1, 0.75)?;
    for n in 1..=4u64 {
        let urn_law = enumeration_oracle(&spec, n, DEFAULT_NODE_BUDGET)?;
        let tree_law = enumerate_freezing_tree(&params, n)?;
        let mut from_urn: Vec<(Vec<usize>, String)> = urn_law
            .states
            .iter()
            .map(|s| (s.x.iter().map(|&x| x as usize).collect(), s.prob_exact.clone()))
            .collect();
        from_urn.sort();
        let from_tree: Vec<(Vec<usize>, String)> = tree_law
            .iter()
            .map(|(c, p): (&Vec<usize>, &BigRational)| (c.clone(), p.to_string()))
            .collect();
        if from_urn != from_tree {
            return Ok((false, format!("n={n}: urn and tree laws differ")));
        }
    }
    let urn = Urn::new(spec.clone())?;
    let ens = run_ensemble(&urn, 4, &[1, 2, 3, 4], suite.budget.reps(), SEED + 4, suite.threads)?;
    let rep = conditional_stats(&ens, &[2.0])?;
    let mut worst_z: f64 = 0.0;
    for cp in &rep.checkpoints {
        let exact = enumeration_oracle(&spec, cp.n, DEFAULT_NODE_BUDGET)?;
        let want = exact.conditional_mean.unwrap_or_default();
        if cp.n == 2 && want != [1.25, 0.125, 1.25, 0.125] {
            return Ok((false, format!("oracle mean at n=2 is {want:?}")));
        }
        for (e, w) in cp.mean.iter().zip(&want) {
            let diff = (e.value - w).abs();
            if diff > 4.0 * e.stderr + 1e-12 {
                return Ok((false, format!("n={}: |{} - {w}| > 4 SE ({})", cp.n, e.value, e.stderr)));
            }
            if e.stderr > 0.0 {
                worst_z = worst_z.max(diff / e.stderr);
            }
        }
    }
    Ok((
        true,
        format!("urn and tree laws identical for n <= 4; max |z| = {worst_z:.2} (<= 4) at reps {}", suite.budget.reps()),
    ))
}

fn extinction_probability(suite: &Suite) -> Verdict {
    let (_, rep) = suite.freezing()?;
    let cp = rep.at(512).ok_or_else(|| crate::SimError::InvalidInput("no checkpoint 512".into()))?;
    let survival = 1.0 - cp.extinction_rate.value;
    let band = 0.01 * suite.budget.band();
    let err = (survival - 2.0 / 3.0).abs();
    Ok((
        err <= band,
        format!("survival {survival:.4} +- {:.4}, |err| {err:.4} (<= {band:.4})", cp.extinction_rate.stderr),
    ))
}

fn first_order(suite: &Suite) -> Verdict {
    let (_, rep) = suite.freezing()?;
    let analysis = analyze(&fixtures::freezing(1, 0.75), &Tolerances::default())?;
    let principal = analysis
        .principal
        .ok_or_else(|| crate::SimError::InvalidInput("no principal pair".into()))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut residuals = Vec::new();
    for cp in &rep.checkpoints {
        let n = cp.n as f64;
        let r = cp
            .mean
            .iter()
            .zip(&principal.v1)
            .map(|(m, v)| (m.value - n * principal.lambda1 * v).abs())
            .fold(0.0, f64::max)
            / n.sqrt();
        residuals.push(r);
        xs.push(n.ln());
        ys.push(r.max(f64::MIN_POSITIVE).ln());
    }
    let (slope, _) = crate::simulate::fit::least_squares(&xs, &ys);
    let monotone_up = residuals.windows(2).all(|w| w[1] > w[0]);
    let shown: Vec<String> = residuals.iter().map(|r| format!("{r:.3}")).collect();
    Ok((
        slope <= 0.6 && !monotone_up,
        format!(
            "log-log slope {slope:.3} (<= 0.6), monotone increasing: {monotone_up}; residuals [{}]",
            shown.join(", ")
        ),
    ))
}

fn lp_points(rep: &EstimatorReport, p: f64) -> Vec<GrowthPoint> {
    rep.checkpoints
        .iter()
        .filter_map(|cp| {
            let root = (cp.n as f64).sqrt();
            cp.lp_for(p).map(|l| GrowthPoint {
                n: cp.n,
                value: l.conditional.value * root,
                stderr: l.conditional.stderr * root,
            })
        })
        .collect()
}

/// `(exponent, ci, relative change of L4/sqrt(n) over the top two checkpoints)`.
fn growth_summary(rep: &EstimatorReport) -> Result<(f64, [f64; 2], f64), Error> {
    let fit = growth_exponent_fit(&lp_points(rep, 2.0), SEED + 7)?;
    let top: Vec<f64> = rep
        .checkpoints
        .iter()
        .rev()
        .take(2)
        .filter_map(|cp| cp.lp_for(4.0).map(|l| l.conditional.value))
        .collect();
    let change = (top[0] / top[1] - 1.0).abs();
    Ok((fit.slope, fit.ci, change))
}

fn growth_exponent(suite: &Suite) -> Verdict {
    let (_, freezing) = suite.freezing()?;
    let cyclic = Urn::new(fixtures::cyclic3())?;
    let ens = run_ensemble(&cyclic, 8192, &GROWTH_GRID, suite.budget.reps(), SEED + 7, suite.threads)?;
    let cyclic_rep = conditional_stats(&ens, &[2.0, 4.0])?;
    drop(ens);
    let band = 0.15 * suite.budget.band();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, rep) in [("freezing", freezing), ("cyclic3", &cyclic_rep)] {
        let (slope, ci, change) = growth_summary(rep)?;
        ok &= (0.4..=0.6).contains(&slope) && change < band;
        parts.push(format!(
            "{name}: exponent {slope:.3} [{:.3}, {:.3}], L4/sqrt(n) change {:.1}%",
            ci[0],
            ci[1],
            100.0 * change
        ));
    }
    Ok((ok, format!("{} (exponent in [0.4, 0.6], change < {:.0}%)", parts.join("; "), 100.0 * band)))
}

fn normality(suite: &Suite) -> Verdict {
    let (ens, rep) = suite.freezing()?;
    let activities = fixtures::freezing(1, 0.75).activities;
    let diag = normality_diagnostics(ens, 4096)?;
    let (skew_limit, kurt_limit) = (0.1 * suite.budget.band(), 0.2 * suite.budget.band());
    let mut ok = true;
    let mut parts = Vec::new();
    for c in diag.coords.iter().filter(|c| activities[c.coord] > 0.0) {
        let (Some(s), Some(k)) = (c.skewness, c.excess_kurtosis) else {
            ok = false;
            parts.push(format!("x_{} degenerate", c.coord + 1));
            continue;
        };
        ok &= s.value.abs() < skew_limit && k.value.abs() < kurt_limit;
        parts.push(format!("x_{}: skew {:.3}, kurt {:.3}", c.coord + 1, s.value, k.value));
    }
    let cov = |n: u64| -> Result<DMatrix<f64>, Error> {
        let cp = rep
            .at(n)
            .ok_or_else(|| crate::SimError::InvalidInput(format!("no checkpoint {n}")))?;
        let q = cp.cov_over_n.len();
        Ok(DMatrix::from_fn(q, q, |i, j| cp.cov_over_n[i][j]))
    };
    let (c1, c2) = (cov(2048)?, cov(4096)?);
    let change = spectral_norm(&(&c2 - &c1)) / spectral_norm(&c2);
    let cov_limit = 0.1 * suite.budget.band();
    ok &= change < cov_limit;
    Ok((
        ok,
        format!(
            "{} (limits {skew_limit:.2}/{kurt_limit:.2}); Cov/n change {:.1}% (< {:.0}%)",
            parts.join("; "),
            100.0 * change,
            100.0 * cov_limit
        ),
    ))
}

fn hooking(suite: &Suite) -> Verdict {
    let triangle = HookingParams {
        blocks: vec![BlockGraph::triangle(1.0)],
        chi: 1.0,
        rho: 1.0,
        r: 3,
    };
    for index in 0..20 {
        let run = simulate_hooking(&triangle, 1024, &[], SEED + 9, index)?;
        if run.increment_min != 8.0 || run.increment_max != 8.0 {
            return Ok((
                false,
                format!("triangle increments in [{}, {}], want exactly 8", run.increment_min, run.increment_max),
            ));
        }
    }
    let mixed = HookingParams {
        blocks: vec![BlockGraph::edge(0.5), BlockGraph::triangle(0.5)],
        chi: 1.0,
        rho: 1.0,
        r: 3,
    };
    let reps = suite.budget.hooking_reps();
    let ens = run_hooking_ensemble(&mixed, 4096, &[1024, 2048, 4096], reps, SEED + 9, suite.threads)?;
    let at = |n: u64| ens.checkpoint_index(n).expect("requested checkpoint");
    let inc = ens.mean_increment(at(1024), mixed.rho);
    let inc_band = 0.05 * suite.budget.band();
    let inc_ok = (inc - 5.5).abs() <= inc_band;
    let (c2, c4) = (ens.census_mean(at(2048)), ens.census_mean(at(4096)));
    let mut worst: f64 = 0.0;
    for (a, b) in c2.iter().zip(&c4) {
        let (a, b) = (a / 2048.0, b / 4096.0);
        worst = worst.max((b - a).abs() / b.abs().max(f64::MIN_POSITIVE));
    }
    let census_ok = worst < 0.1;
    Ok((
        inc_ok && census_ok && ens.max_bookkeeping_error == 0.0,
        format!(
            "triangle increment 8 on every step; mixed mean increment {inc:.4} (5.5 +- {inc_band:.3}) at reps {reps}; census/n change {:.1}% (< 10%) over degrees {:?}",
            100.0 * worst,
            ens.essential_degrees
        ),
    ))
}

fn determinism(suite: &Suite) -> Verdict {
    let urn = freezing_k1()?;
    let reps = suite.budget.reps() / 10;
    let cps = [64, 128, 256];
    let csv = |threads: usize| -> Result<Vec<u8>, Error> {
        let ens = run_ensemble(&urn, 256, &cps, reps, SEED + 10, threads)?;
        let mut buf = Vec::new();
        write_ensemble_csv(&ens, None, &mut buf)?;
        Ok(buf)
    };
    let identical = csv(1)? == csv(8)?;
    let mut log_sum = 0.0;
    let mut count = 0;
    for pair in 0..SE_PAIRS {
        let seed = SEED + 100 + pair;
        let single = run_ensemble(&urn, 256, &cps, reps, seed, suite.threads)?;
        let double = run_ensemble(&urn, 256, &cps, 2 * reps, seed, suite.threads)?;
        let (r1, r2) = (conditional_stats(&single, &[2.0])?, conditional_stats(&double, &[2.0])?);
        for (a, b) in r1.checkpoints.iter().zip(&r2.checkpoints) {
            for (x, y) in a.mean.iter().zip(&b.mean) {
                if x.stderr > 0.0 && y.stderr > 0.0 {
                    log_sum += (x.stderr / y.stderr).ln();
                    count += 1;
                }
            }
        }
    }
    let ratio = (log_sum / count.max(1) as f64).exp();
    let ok = identical && (1.3..=1.5).contains(&ratio) && count > 0;
    Ok((
        ok,
        format!(
            "threads 1 vs 8 byte-identical: {identical}; SE ratio {ratio:.3} in [1.3, 1.5] (geometric mean over {count} mean estimates from {SE_PAIRS} seeds, reps {reps} vs {})",
            2 * reps
        ),
    ))
}

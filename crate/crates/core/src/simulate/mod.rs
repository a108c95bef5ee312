//! Reproducible Monte Carlo ensembles, estimators conditioned on
//! non-extinction, decomposition audits and the exact enumeration oracle.

pub mod audit;
pub mod ensemble;
pub mod estimate;
pub mod fit;
pub mod io;
pub mod martingale;
pub mod normality;
pub mod oracle;

use thiserror::Error;

use crate::spectral::SpectralError;
use crate::urn::UrnError;

pub use audit::{decomposition_audit, AuditPlan, AuditReport, TrajectoryAudit};
pub use ensemble::{default_thread_budget, run_ensemble, Ensemble};
pub use estimate::{conditional_stats, CheckpointStats, Estimate, EstimatorReport};
pub use fit::{growth_exponent_fit, GrowthFit, GrowthPoint};
pub use martingale::{martingale_check, MartingaleAccumulator, MartingaleReport};
pub use normality::{diagnose_columns, normality_diagnostics, NormalityReport};
pub use oracle::{enumeration_oracle, OracleReport};

/// Number of bootstrap resamples behind every standard error.
pub const RESAMPLES: usize = 200;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Urn(#[from] UrnError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("trajectory {index}: {source}")]
    Trajectory { index: u64, source: UrnError },
    #[error("only {survivors} survivors at n = {n}, need {required}")]
    TooFewSurvivors {
        n: u64,
        survivors: usize,
        required: usize,
    },
    #[error("decomposition residual {residual:.3e} at n = {n} exceeds 1e-6")]
    ResidualTooLarge { residual: f64, n: u64 },
    #[error("strictly balanced urn produced noise {value:e} at step {step}")]
    NoiseNotZero { step: u64, value: f64 },
    #[error("insufficient range: {0}")]
    InsufficientRange(String),
    #[error("state space exceeded the budget of {budget} states at step {level}")]
    StateSpaceTooLarge { budget: usize, level: u64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, SimError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| SimError::ThreadPool(e.to_string()))
}

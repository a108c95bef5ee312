//! Generalized Pólya urns balanced in expectation.
//!
//! Urn dynamics, spectral analysis of the intensity matrix, the
//! martingale-plus-noise decomposition and Monte Carlo estimators for the
//! moments of the composition conditioned on non-extinction.

pub mod acceptance;
pub mod fixtures;
pub mod models;
pub mod report;
pub mod rng;
pub mod simulate;
pub mod spectral;
pub mod urn;

use thiserror::Error;

pub use models::ModelError;
pub use simulate::SimError;
pub use spectral::SpectralError;
pub use urn::UrnError;

/// Any failure surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Urn(#[from] UrnError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 1 for I/O and usage, 2 for invalid input, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Urn(e) => urn_code(e),
            Error::Spectral(SpectralError::Urn(e)) => urn_code(e),
            Error::Spectral(_) => 3,
            Error::Model(ModelError::Urn(e)) => urn_code(e),
            Error::Model(ModelError::ClosureBudgetExceeded { .. }) => 3,
            Error::Model(_) => 2,
            Error::Sim(e) => sim_code(e),
            Error::Json(_) => 1,
        }
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Urn(e) => urn_kind(e),
            Error::Spectral(e) => spectral_kind(e),
            Error::Model(e) => match e {
                ModelError::Urn(e) => urn_kind(e),
                ModelError::InvalidParams(_) => "InvalidParams",
                ModelError::ClosureBudgetExceeded { .. } => "ClosureBudgetExceeded",
                ModelError::NonpositiveWeight { .. } => "NonpositiveWeight",
            },
            Error::Sim(e) => match e {
                SimError::Urn(e) | SimError::Trajectory { source: e, .. } => urn_kind(e),
                SimError::Spectral(e) => spectral_kind(e),
                SimError::TooFewSurvivors { .. } => "TooFewSurvivors",
                SimError::ResidualTooLarge { .. } => "ResidualTooLarge",
                SimError::NoiseNotZero { .. } => "NoiseNotZero",
                SimError::InsufficientRange(_) => "InsufficientRange",
                SimError::StateSpaceTooLarge { .. } => "StateSpaceTooLarge",
                SimError::InvalidInput(_) => "InvalidInput",
                SimError::ThreadPool(_) => "ThreadPool",
                SimError::Io(_) => "Io",
            },
            Error::Json(_) => "Json",
        }
    }
}

fn urn_code(e: &UrnError) -> i32 {
    match e {
        UrnError::TenabilityViolation { .. } => 3,
        _ => 2,
    }
}

fn urn_kind(e: &UrnError) -> &'static str {
    match e {
        UrnError::MalformedSpec(_) => "MalformedSpec",
        UrnError::NotBalancedInExpectation { .. } => "NotBalancedInExpectation",
        UrnError::NonpositiveB(_) => "NonpositiveB",
        UrnError::TenabilityViolation { .. } => "TenabilityViolation",
        UrnError::InvalidCheckpoints(_) => "InvalidCheckpoints",
    }
}

fn spectral_kind(e: &SpectralError) -> &'static str {
    match e {
        SpectralError::Urn(e) => urn_kind(e),
        SpectralError::IllConditioned(_) => "IllConditioned",
        SpectralError::DominantMismatch { .. } => "DominantMismatch",
        SpectralError::NotSimple { .. } => "NotSimple",
        SpectralError::TooLarge(_) => "TooLarge",
    }
}

fn sim_code(e: &SimError) -> i32 {
    match e {
        SimError::Urn(e) | SimError::Trajectory { source: e, .. } => urn_code(e),
        SimError::Spectral(SpectralError::Urn(e)) => urn_code(e),
        SimError::Spectral(_) => 3,
        SimError::TooFewSurvivors { .. }
        | SimError::ResidualTooLarge { .. }
        | SimError::NoiseNotZero { .. }
        | SimError::StateSpaceTooLarge { .. } => 3,
        SimError::InsufficientRange(_) | SimError::InvalidInput(_) => 2,
        SimError::ThreadPool(_) | SimError::Io(_) => 1,
    }
}

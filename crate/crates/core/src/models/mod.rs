//! The two applications: uniform attachment trees with freezing and hooking
//! networks.

pub mod freezing;
pub mod hooking;

use thiserror::Error;

use crate::urn::UrnError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("essential-degree closure exceeded its budget of {budget} candidates")]
    ClosureBudgetExceeded { budget: usize },
    #[error("vertex {vertex} has non-positive weight {weight}")]
    NonpositiveWeight { vertex: usize, weight: f64 },
    #[error(transparent)]
    Urn(#[from] UrnError),
}

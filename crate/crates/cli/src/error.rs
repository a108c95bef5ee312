use std::path::Path;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] polya_urn::Error),
    #[error("acceptance failed: criteria {0:?}")]
    Acceptance(Vec<u8>),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::Core(e) => e.exit_code(),
            CliError::Acceptance(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "UsageError",
            CliError::Io { .. } => "IoError",
            CliError::Core(e) => e.kind(),
            CliError::Acceptance(_) => "AcceptanceFailure",
        }
    }

    /// Machine-readable form printed on stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            error: &'a str,
            message: String,
            exit_code: i32,
        }
        serde_json::to_string(&Body {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        })
        .expect("error serializes")
    }
}

impl From<polya_urn::SimError> for CliError {
    fn from(e: polya_urn::SimError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<polya_urn::SpectralError> for CliError {
    fn from(e: polya_urn::SpectralError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<polya_urn::UrnError> for CliError {
    fn from(e: polya_urn::UrnError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<polya_urn::ModelError> for CliError {
    fn from(e: polya_urn::ModelError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum QsError {
    #[error("capacity: {0}")]
    Capacity(String),

    /// A caller violated a documented precondition.
    #[error("contract: {0}")]
    Contract(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical failure at index {index}: {message}")]
    Numerical { index: usize, message: String },

    #[error("unsupported gate: {0}")]
    UnsupportedGate(String),

    #[error("unsupported feature at line {line}: {feature}")]
    UnsupportedFeature { line: usize, feature: String },

    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("incompatible artifact version: found {found}, expected {expected}")]
    Version { found: String, expected: String },

    #[error("corrupt artifact: {0}")]
    Corrupt(String),

    #[error("scheme mismatch: artifact is {found}, expected {expected}")]
    SchemeMismatch { found: String, expected: String },

    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl QsError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        QsError::Contract(msg.into())
    }

    /// Short machine-readable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self {
            QsError::Capacity(_) => "capacity",
            QsError::Contract(_) => "contract",
            QsError::Degenerate(_) => "degenerate",
            QsError::Numerical { .. } => "numerical",
            QsError::UnsupportedGate(_) => "unsupported_gate",
            QsError::UnsupportedFeature { .. } => "unsupported_feature",
            QsError::Parse { .. } => "parse",
            QsError::Version { .. } => "version",
            QsError::Corrupt(_) => "corrupt",
            QsError::SchemeMismatch { .. } => "scheme_mismatch",
            QsError::File { .. } => "file",
            QsError::Io(_) => "io",
        }
    }
}

pub type Result<T, E = QsError> = std::result::Result<T, E>;

// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors raised by the lab's numeric routines, harness and CLI plumbing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate configuration: {0}")]
    DegenerateConfig(String),

    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("deviation bound undefined: {0}")]
    BoundUndefined(String),

    #[error("degenerate inequality probe: {0}")]
    DegenerateProbe(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl LabError {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Self::InvalidInput(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }
}

impl From<std::io::Error> for LabError {
    fn from(err: std::io::Error) -> Self {
        Self::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn ensure_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(LabError::invalid_input(format!(
            "{what} must be finite; got {x}"
        )))
    }
}

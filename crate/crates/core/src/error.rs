//! Crate-wide error type.
//!
//! Two broad classes matter downstream: validation failures (bad parameters
//! or configs, CLI exit code 2) and numerical failures (non-convergence,
//! step-size underflow, CLI exit code 3).

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// Invalid parameters, configs, or preconditions.
    #[error("validation error: {0}")]
    Validation(String),

    /// A solver or integrator failed to reach its tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

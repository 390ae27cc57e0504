//! Error type shared by the whole crate.

use thiserror::Error;

/// Crate-wide error type.
///
/// `Parameter` means the caller handed us something invalid (bad sizes,
/// out-of-range indices, malformed configs). `Domain` means the inputs were
/// well-formed but the requested quantity does not exist (zero eigenvalues
/// under a filter weight, undefined Fisher information). `Numerical` covers
/// failures detected at run time, such as a synthesis whose imaginary residue
/// indicates broken conjugate symmetry.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("conjugate symmetry violated: {0}")]
    ConjugateSymmetry(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code the CLI maps this error to: 1 for parameter/input
    /// problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
            Error::Domain(_) | Error::ConjugateSymmetry(_) | Error::Numerical(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use alloc::string::String;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Resource,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("{requested} qubits exceeds the configured maximum of {max}")]
    TooManyQubits { requested: usize, max: usize },
    #[error("{what} needs {requested} events, above the cap of {cap}")]
    EventCap {
        what: &'static str,
        requested: u128,
        cap: u64,
    },
    #[error("matrix is not Hermitian (deviation {deviation:e}, tolerance {tolerance:e})")]
    NotHermitian { deviation: f64, tolerance: f64 },
    #[error("matrix is not unitary (deviation {deviation:e}, tolerance {tolerance:e})")]
    NotUnitary { deviation: f64, tolerance: f64 },
    #[error("eigenphase {phase} lies within {margin:e} of the branch cut at +-pi")]
    BranchAmbiguity { phase: f64, margin: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::TooManyQubits { .. } | Error::EventCap { .. } => ErrorKind::Resource,
            Error::NotUnitary { .. } | Error::BranchAmbiguity { .. } | Error::Numerical(_) => {
                ErrorKind::Numerical
            }
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

pub type Result<T> = core::result::Result<T, Error>;

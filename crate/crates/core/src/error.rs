use thiserror::Error;

/// Which density-matrix invariant a candidate state violated.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateViolation {
    #[error("matrix is not Hermitian (max |rho - rho^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("wavelength {wavelength_um} um outside valid range [{min_um}, {max_um}] um")]
    OutOfRange {
        wavelength_um: f64,
        min_um: f64,
        max_um: f64,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("no phase-matched solution in the search window")]
    NoPhaseMatch,
    #[error("invalid two-qubit state: {0}")]
    InvalidState(#[from] StateViolation),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("measurement design is rank deficient (rank {rank}, need 16)")]
    RankDeficient { rank: usize },
    #[error("degenerate fringe fit: {0}")]
    DegenerateFit(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("at delay {delay_fs} fs: {source}")]
    AtDelay {
        delay_fs: f64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by malformed user input (config files, CSV/JSON
    /// inputs) rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        if let Error::AtDelay { source, .. } = self {
            return source.is_input_error();
        }
        matches!(
            self,
            Error::Config(_) | Error::Parse(_) | Error::Json(_) | Error::Csv(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

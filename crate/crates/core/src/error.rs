use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("series did not reach tolerance {tol:e} within {cap} terms (argument {arg})")]
    SeriesTruncation { arg: f64, tol: f64, cap: usize },

    #[error("quadrature did not converge: estimated error {err:e} above {tol:e}")]
    Quadrature { err: f64, tol: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("greedy step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("incompatible checkpoint: {0}")]
    IncompatibleCheckpoint(String),

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Stable snake_case name of the variant, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::SeriesTruncation { .. } => "series_truncation",
            Error::Quadrature { .. } => "quadrature",
            Error::Solver(_) => "solver",
            Error::Step { .. } => "step",
            Error::IncompatibleCheckpoint(_) => "incompatible_checkpoint",
            Error::CorruptCheckpoint(_) => "corrupt_checkpoint",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

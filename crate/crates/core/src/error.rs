use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("not Hermitian (max defect {0:e})")]
    NotHermitian(f64),

    #[error("not anti-Hermitian (max defect {0:e})")]
    NotAntiHermitian(f64),

    #[error("non-finite entry encountered in {0}")]
    NonFinite(&'static str),

    #[error("state is not normalized (norm defect {0:e})")]
    NotNormalized(f64),

    #[error("expectation has imaginary part {0:e}")]
    ImaginaryExpectation(f64),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("degenerate dispersion: sigma = {0:e} at or below floor")]
    DegenerateDispersion(f64),

    #[error("operator is not traceless (trace {0:e})")]
    NotTraceless(f64),

    #[error("exact propagation requested for an operator not flagged as a commuting family")]
    NotCommutingFamily,

    #[error("norm budget exceeded at step {step}: defect {defect:e}")]
    NormBudgetExceeded { step: usize, defect: f64 },

    #[error("Bloch vector drift {0:e} exceeds limit; grid too coarse")]
    BlochDrift(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("undefined: {0}")]
    Undefined(&'static str),

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },
}

impl Error {
    pub fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config { path: path.into(), reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

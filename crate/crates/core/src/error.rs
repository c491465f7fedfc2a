use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not Hurwitz: eigenvalue {re} + {im}i has non-negative real part")]
    NonHurwitz { re: f64, im: f64 },

    #[error("matrix is not symmetric positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid comparison function: {0}")]
    InvalidComparison(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trigger threshold undefined: beta({norm}) = 0")]
    ThresholdUndefined { norm: f64 },

    #[error("sampling region is unbounded")]
    RegionUnbounded,

    #[error("invalid interval [{s1}, {s2}]")]
    InvalidInterval { s1: f64, s2: f64 },

    #[error("model check failed: {0}")]
    ModelCheck(String),

    #[error("numerical blow-up at t = {t}")]
    NumericalBlowup { t: f64 },

    #[error("Zeno behaviour suspected: {count} events within {window} s ending at t = {t}")]
    ZenoSuspected { t: f64, count: usize, window: f64 },

    #[error("runtime invariant violated at t = {t}: {detail}")]
    InvariantViolation { t: f64, detail: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fibre map is not monotone: decrease of {decrease:e} near x = {at}")]
    NotMonotone { at: f64, decrease: f64 },

    #[error("target {target} outside [{lo}, {hi}]")]
    OutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("numeric degeneracy: {0}")]
    NumericDegeneracy(String),

    #[error("orbit coincidence lost at step {step} (|F - F_t| = {gap:e}); survivor depth too small")]
    DepthInsufficient { step: usize, gap: f64 },

    #[error("continuation jump of {jump} at theta = {theta}; theta grid too coarse")]
    ContinuationFailure { theta: f64, jump: f64 },

    #[error("property violation: {0}")]
    PropertyViolation(String),

    #[error("certificate failure: {0}")]
    CertificateFailure(String),

    #[error("inconsistent certificate: {0}")]
    InconsistentCertificate(String),

    #[error("config error on `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

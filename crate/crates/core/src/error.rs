use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("fields live on different measure spaces")]
    SpaceMismatch,
    #[error("invalid measure space: {0}")]
    InvalidSpace(String),
    #[error("field has {got} values but the space has {expected} points")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field value at index {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("alpha must be nonnegative, got {0}")]
    NegativeAlpha(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("contraction rejected: {0}")]
    Contraction(String),
    #[error("energy is +inf at the zero field")]
    InfiniteAtZero,
    #[error("energy spot-check failed: {0}")]
    SpotCheck(String),
    #[error("Luxembourg bracket not found in [1e-12, 1e12]")]
    LuxembourgBracket,
    #[error("no domain projection available and the domain is not the whole space")]
    NoDomainProjection,
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("energy estimates are not monotone in lambda (drop {drop:.3e} at index {index})")]
    NonMonotone { index: usize, drop: f64 },
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    Asymmetric(f64),
    #[error("brute-force search supports at most 3 points, space has {0}")]
    SpaceTooLarge(usize),
    #[error("point {0:?} lies outside the closed unit box")]
    OutsideBox([f64; 2]),
    #[error("sampler strategy `{got}` cannot be used here; expected {expected}")]
    Strategy { got: String, expected: &'static str },
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

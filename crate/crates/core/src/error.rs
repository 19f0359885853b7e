use thiserror::Error;

/// Errors raised by estimation, simulation and experiment routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("regressor matrix is rank deficient (smallest/largest singular value {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("empty input")]
    EmptyInput,

    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    #[error("residual covariance is numerically singular")]
    SingularSigma,

    #[error("simulated path exceeded the overflow guard at t = {t}")]
    ExplosiveOverflow { t: usize },

    #[error("fit is not stationary (companion spectral radius {radius:.6})")]
    NonstationaryInput { radius: f64 },

    #[error("{failed} of {total} bootstrap draws failed")]
    TooManyFailedDraws { failed: usize, total: usize },

    #[error("{cell}: {failed} of {total} repetitions failed")]
    TooManyFailedReps { cell: String, failed: usize, total: usize },

    #[error("argument out of domain: {0}")]
    DomainError(String),

    #[error("indifference point is undefined at h = 1")]
    UndefinedAtH1,

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("invalid experiment configuration: {0}")]
    ConfigInvalid(String),

    #[error("table keys do not match: {0}")]
    KeyMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

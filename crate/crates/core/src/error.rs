use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Jets over different variable sets, base points or algebras were combined.
    #[error("incompatible jets: {0}")]
    Incompatible(String),

    /// A reciprocal, square root or inverse was requested at a singular base value.
    #[error("singular input: {0}")]
    Singular(String),

    /// The truncation order is too small for the requested derivatives.
    #[error("order exhausted: {what} needs jet order {needed}, have {have}")]
    OrderExhausted {
        what: String,
        needed: i32,
        have: i32,
    },

    /// Metric or viscosity violates the boundary normal form or positivity.
    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    /// The cotangent direction is zero or otherwise unusable.
    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    /// Sampled directions do not span the space of symmetric forms.
    #[error("rank-deficient direction set: {0}")]
    RankDeficient(String),

    /// Values that should be homogeneous of a given degree are not.
    #[error("homogeneity violation: {0}")]
    Homogeneity(String),

    /// A quantity that must be real carries an imaginary part.
    #[error("unexpected imaginary part {value:e} in {what}")]
    NotReal { what: String, value: f64 },

    /// Configuration parsing or validation failure.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    /// Symbol dump or report could not be read or written.
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

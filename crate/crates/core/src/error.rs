use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("generator set is not symmetric: {0:?} has no negative partner")]
    AsymmetricGenerators(Vec<i64>),

    #[error("generator set contains the zero offset")]
    ZeroGenerator,

    #[error("generator {0:?} appears more than once")]
    DuplicateGenerator(Vec<i64>),

    #[error("graph induced by the generators is disconnected")]
    Disconnected,

    #[error("operation requires a torus domain")]
    NotTorus,

    #[error("period {period} does not divide side {side}")]
    PeriodMismatch { period: usize, side: usize },

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("indefinite energy form: p-th power of the norm is {0}")]
    IndefiniteNorm(f64),

    #[error("function is identically zero")]
    ZeroFunction,

    #[error("fibering map does not turn over before t = {bound:e}; superlinear growth fails (is q <= p?)")]
    DivergingFiber { bound: f64 },

    #[error("hypotheses violated: {0}")]
    Hypotheses(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

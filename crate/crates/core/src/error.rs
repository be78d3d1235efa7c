use thiserror::Error;

/// Errors raised by constructions and parsers in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("probabilities sum to {sum}, expected 1 (tolerance {tol:e})")]
    NotNormalized { sum: f64, tol: f64 },

    #[error("invalid probability {value} for symbol `{label}`")]
    InvalidProbability { label: String, value: f64 },

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("empty distribution")]
    Empty,

    #[error("parameter `{name}` = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("{what} requires {required} entries, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        required: f64,
        cap: f64,
    },

    #[error("transition matrix is not irreducible: state {0} cannot reach every state")]
    NotIrreducible(usize),

    #[error("column {column} of the transition matrix sums to {sum}")]
    NotStochastic { column: usize, sum: f64 },

    #[error("matrix shape mismatch: {0}")]
    Shape(String),

    #[error("numerically negative variance {0:e}")]
    NegativeVariance(f64),

    #[error("code and extractor do not share an encoder")]
    EncoderMismatch,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("cache error: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;

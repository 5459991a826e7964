use thiserror::Error;

/// Errors raised by the numerical and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The result cannot be determined in floating point (e.g. both
    /// numerator and denominator underflow).
    #[error("indeterminate result: {0}")]
    Indeterminate(String),

    /// A numerical procedure failed to reach its requested tolerance.
    #[error(
        "quadrature did not converge: estimate {estimate:e}, achieved error {achieved:e} > tolerance {tolerance:e}"
    )]
    Accuracy {
        estimate: f64,
        achieved: f64,
        tolerance: f64,
    },

    /// A configuration violates an invariant of the model.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Malformed data handed to an aggregation routine.
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Parse(#[from] ConfigError),

    /// Filesystem failure while reading inputs or writing results.
    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },
}

/// Diagnostics for run-configuration text. Line numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: key `{key}` already set on line {first}")]
    Duplicate { line: usize, key: String, first: usize },

    #[error("line {line}: key `{key}` does not carry a supported unit; expected `{expected}`")]
    Unit {
        line: usize,
        key: String,
        expected: String,
    },

    #[error("line {line}: key `{key}`: {reason}")]
    Value {
        line: usize,
        key: String,
        reason: String,
    },

    #[error("missing required keys: {}", .keys.join(", "))]
    Missing { keys: Vec<String> },

    #[error("{}key `{key}`: {reason}", .line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invariant {
        key: String,
        line: Option<usize>,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

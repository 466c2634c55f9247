use thiserror::Error;

/// Errors raised by the analytic and simulation layers.
///
/// The variants map onto the runner's exit codes: `Config` is a
/// configuration problem, `Numerical`/`Solver`/`Range` are numerical
/// failures and `Contract`/`Domain`/`Size` are violated preconditions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("numerical error in {op}: {msg}")]
    Numerical { op: &'static str, msg: String },

    #[error("solver error in {op}: {msg}; trace: {trace:?}")]
    Solver {
        op: &'static str,
        msg: String,
        trace: Vec<f64>,
    },

    #[error("range error in {op}: {value} outside [{lo}, {hi}]")]
    Range {
        op: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("contract violated in {op}: {msg}")]
    Contract { op: &'static str, msg: String },

    #[error("size error in {op}: {count} exceeds limit {limit}")]
    Size { op: &'static str, count: u128, limit: u128 },

    #[error("config error at line {line} (key `{key}`): {msg}")]
    Config { key: String, line: usize, msg: String },
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }

    pub(crate) fn contract(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Contract { op, msg: msg.into() }
    }

    pub(crate) fn numerical(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Numerical { op, msg: msg.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

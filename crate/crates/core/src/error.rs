use thiserror::Error;

use crate::minimizer::MinimizerResult;

/// Which parameter of the problem violated the admissible regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ParamField {
    N,
    P,
    B,
    M,
}

impl std::fmt::Display for ParamField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ParamField::N => "N",
            ParamField::P => "p",
            ParamField::B => "b",
            ParamField::M => "M",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("regime violation: {field} must satisfy {bound} (got {value})")]
    RegimeViolation {
        field: ParamField,
        bound: String,
        value: f64,
    },

    #[error("a* must be positive (got {0})")]
    NonpositiveAStar(f64),

    #[error("bad grid specification: {0}")]
    BadGridSpec(String),

    #[error("weight r^(N-1{gamma:+}) is not integrable at the origin for N = {n}")]
    WeightNotIntegrable { n: usize, gamma: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field is identically zero")]
    ZeroField,

    #[error("field contains a non-finite value at node {0}")]
    NonFinite(usize),

    #[error("no sign change of the shooting discriminant in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("bisection stalled with bracket width {0:e}")]
    BisectionStalled(f64),

    #[error("gradient flow diverged after {0} iterations")]
    FlowDiverged(usize),

    #[error("flow reached the iteration cap of {}", .0.iters)]
    MaxItersReached(Box<MinimizerResult>),

    #[error("grid too coarse: residual {0:e}")]
    GridTooCoarse(f64),

    #[error("the profile w has not been computed")]
    ProfileMissing,

    #[error("tail is not positive on the fit window at r = {0}")]
    NonpositiveTail(f64),

    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization failure: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

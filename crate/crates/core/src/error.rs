use thiserror::Error;

use crate::primitives::AxisSymbol;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("cannot correlate empty sequences")]
    EmptySequence,

    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("block count must be at least 1")]
    EmptyBlock,

    #[error("no angle configured for axis {0}")]
    MissingAngle(AxisSymbol),

    #[error("model `{model}` cannot assign a value to axis {axis}")]
    UnsupportedAxis {
        model: &'static str,
        axis: AxisSymbol,
    },

    #[error("malformed replay file at line {line}: {reason}")]
    MalformedReplay { line: usize, reason: String },

    #[error("replay file declares {axis} at {found} rad, block expects {expected} rad")]
    ReplayAxisMismatch {
        axis: AxisSymbol,
        expected: f64,
        found: f64,
    },

    #[error("replay file provides {available} pairs, block needs {requested}")]
    ReplayExhausted { available: usize, requested: usize },

    #[error("boost velocity beta = {0} must satisfy |beta| < 1")]
    InvalidBoost(f64),

    #[error("events are not spacelike separated; no observer can reverse their order")]
    NotSpacelike,

    #[error("no single Lorentz observer orders every pair of the schedule as requested")]
    NoCommonObserver,
}

use thiserror::Error;

use crate::geometry::BoxIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length must be non-negative, got {0}")]
    NegativeLength(f64),

    #[error("length must be positive, got {0}")]
    NonPositiveLength(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("window is empty")]
    EmptyWindow,

    #[error("box {0} lies outside the window")]
    BoxOutsideWindow(BoxIndex),

    #[error("point {0:?} lies outside the window")]
    PointOutsideWindow(Vec<f64>),

    #[error("environment has no usable points")]
    EmptyEnvironment,

    #[error("box {bx} holds {count} points, index {k} is out of range")]
    PointIndexOutOfRange { bx: BoxIndex, k: usize, count: usize },

    #[error("bit tape did not stabilize within {0} bits")]
    TapeOverflow(usize),

    #[error("brute force is limited to {limit} usable points, view has {got}")]
    TooManyPoints { limit: usize, got: usize },

    #[error("target unreachable")]
    Unreachable,

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("negative sample {0} in entropy estimate")]
    NegativeSample(f64),

    #[error("{0} is out of the supported range")]
    OutOfRange(String),
}

//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A telemetry record could not be interpreted. `record` is the
    /// zero-based index of the offending record in the input document.
    #[error("record {record}: {reason}")]
    Parse { record: usize, reason: String },

    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(i64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("series unit is {actual}, expected {expected}")]
    UnitMismatch {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("leading missing value: no earlier valid instance to fill from")]
    LeadingMissing,

    #[error("missing value at index {0} where a complete series is required")]
    MissingValue(usize),

    #[error("series length {actual} does not match expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("constant series: {0}")]
    ConstantSeries(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("numerically singular: {0}")]
    Singular(String),

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("outlier mask flags every point; nothing to fill from")]
    AllFlagged,

    #[error("mask length {mask} does not match series length {series}")]
    MaskLengthMismatch { mask: usize, series: usize },

    #[error("actual value at index {0} is zero; MAPE is undefined")]
    ZeroActual(usize),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The release would push the discounted loss sum past the budget.
    /// The ledger is left untouched when this is returned.
    #[error("budget exceeded at release {k}: discounted loss {would_be} > limit {limit}")]
    BudgetExceeded { k: u64, would_be: f64, limit: f64 },

    #[error("release index {got} is not the next index {expected}")]
    NonContiguousIndex { expected: u64, got: u64 },

    #[error("cannot evaluate discounted sum at t={t} below ledger frontier {frontier}")]
    RetroactiveQuery { t: u64, frontier: u64 },

    #[error("custom schedule has {len} scales, no scale for release {k}")]
    ScheduleExhausted { k: u64, len: usize },

    #[error("column has length {got}, dataset has {expected} individuals")]
    LengthMismatch { expected: usize, got: usize },

    #[error("entry {index} = {value} outside bounds [{lo}, {hi}]")]
    BoundsViolation { index: usize, value: f64, lo: f64, hi: f64 },

    #[error("customer {customer} on {day}: {value} outside bounds [{lo}, {hi}]")]
    ReadingOutOfBounds { customer: String, day: String, value: f64, lo: f64, hi: f64 },

    #[error("every entry of column {t} is missing")]
    AllMissing { t: usize },

    #[error("column index {t} out of range 1..={len}")]
    IndexOutOfRange { t: usize, len: usize },

    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error("line {line}: duplicate reading for customer {customer} at {timestamp}")]
    DuplicateReading { line: u64, customer: String, timestamp: String },

    #[error("true mean is zero, relative error is undefined")]
    ZeroMean,

    #[error(
        "dataset has missing entries under the exclude-from-mean policy; the per-column \
         divisor changes between neighbours and the sensitivity bound does not hold"
    )]
    UnsoundSensitivity,

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

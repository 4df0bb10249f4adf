use std::path::PathBuf;

/// Errors produced by ingestion, fitting, forecasting and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(String),
    #[error("timestamps are not on an hourly grid near {0}")]
    NonHourlySpacing(String),
    #[error("unknown timezone {0:?}")]
    UnknownTimezone(String),
    #[error("zone {0} not found")]
    ZoneNotFound(u32),
    #[error("station {0} not found")]
    StationNotFound(u32),
    #[error("gap of {len} hours at the series boundary cannot be repaired (max_gap = {max_gap})")]
    UnrepairableBoundaryGap { len: usize, max_gap: usize },
    #[error("gap starting at index {start} has no weekly neighbour to back-fill from")]
    UnrepairableGap { start: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("series contains missing values")]
    MissingValues,
    #[error("non-positive value {value} at index {index}")]
    NonPositiveValue { index: usize, value: f64 },
    #[error("insufficient data: need {needed}, have {available}")]
    InsufficientData { needed: usize, available: usize },
    #[error("lead time {0} outside 1..=24")]
    LeadOutOfRange(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid bounds in coordinate {0}")]
    InvalidBounds(usize),
    #[error("starting point is outside the box in coordinate {0}")]
    StartOutsideBounds(usize),
    #[error("objective is not finite at the starting point")]
    NonFiniteObjective,
    #[error("effective sample size {n_eff} too small for {k} parameters")]
    DegenerateSampleSize { n_eff: usize, k: usize },
    #[error("model state is at index {state}, forecast origin is {origin}")]
    StateOutOfSync { state: usize, origin: usize },
    #[error("series has no temperature channel")]
    MissingExogenous,
    #[error("series span too short: {0}")]
    SpanTooShort(String),
    #[error("no valid pairs to evaluate")]
    EmptyForecastMatrix,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

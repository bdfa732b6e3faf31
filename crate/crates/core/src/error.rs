use thiserror::Error;

/// Errors raised by the solvers, the data layer and the benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("coordinate out of range at waypoint {index}: {detail}")]
    CoordinateRange { index: usize, detail: String },

    #[error("waypoint set mixes geographic and planar coordinates")]
    MixedCoordinates,

    #[error("metric {metric} is not valid for {kind} coordinates")]
    MetricMismatch {
        metric: &'static str,
        kind: &'static str,
    },

    #[error("invalid tour: {0}")]
    InvalidTour(String),

    #[error("index {index} out of range for {n} waypoints")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("instance size {n} outside supported range {min}..={max}")]
    SizeOutOfRange { n: usize, min: usize, max: usize },

    #[error("invalid parameter {name}: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("odd-degree vertex set of size {size} exceeds exact matching limit {limit}")]
    MatchingTooLarge { size: usize, limit: usize },

    #[error("distance matrix violates the triangle inequality ({i}, {j}, {k})")]
    NonMetric { i: usize, j: usize, k: usize },

    #[error("time budget exhausted before any tour was produced")]
    BudgetExceeded,

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("duplicate id {0}")]
    DuplicateId(i64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param(name: &'static str, detail: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        detail: detail.into(),
    }
}

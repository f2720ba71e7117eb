use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operation requires a nonempty set")]
    EmptySet,
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("instance of size {size} exceeds the exact-solver cap {cap}")]
    TooLargeForExact { size: usize, cap: usize },
    #[error("invalid packing: {0}")]
    InvalidPacking(String),
    #[error("map is not {c}-Lipschitz: points {a} and {b} violate the bound")]
    NotLipschitz { a: usize, b: usize, c: f64 },
    #[error("invalid gauge function: {0}")]
    InvalidGauge(String),
    #[error("invalid scale: {0}")]
    InvalidScale(String),
    #[error("not a pre-measure: {0}")]
    NotPreMeasure(String),
    #[error("invalid digit blocks: {0}")]
    InvalidBlocks(String),
    #[error("level {requested} exceeds the truncation depth {depth}")]
    DepthExceeded { requested: u64, depth: u64 },
    #[error("discretization would produce {count} points, cap is {cap}")]
    TooManyPoints { count: u128, cap: usize },
    #[error("scale generator exhausted at level {level}; need members below exp({needed_ln:.3})")]
    ScaleTooCoarse { level: usize, needed_ln: f64 },
    #[error("scale {0} lies outside the constructed range")]
    ScaleOutOfRange(String),
    #[error("cells at different levels: {0:?}")]
    LevelMismatch(Vec<usize>),
    #[error("estimator needs at least {needed} rows, got {rows}")]
    InsufficientData { rows: usize, needed: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

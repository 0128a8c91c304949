use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("result exceeds floating-point range: {0}")]
    Range(String),

    #[error("tolerance {0} is below what double precision can certify")]
    Tolerance(f64),

    #[error("invalid index: {0}")]
    Index(String),

    #[error("reflection does not map the index set [{lo}, {hi}] onto itself")]
    ReflectionMismatch { lo: i64, hi: i64 },

    #[error("not enough data: need at least {needed}, got {got}")]
    TooFew { needed: usize, got: usize },

    #[error("oracle size cap exceeded: n = {n}, max = {max}")]
    SizeCap { n: usize, max: usize },

    #[error("empty observation")]
    Empty,

    #[error("csv schema mismatch in {path}: missing columns {missing:?}")]
    Schema { path: PathBuf, missing: Vec<String> },

    #[error("malformed permutation: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

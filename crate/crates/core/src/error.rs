use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid manifold spec: {0}")]
    InvalidManifold(String),

    #[error("invalid outcome model: {0}")]
    InvalidModel(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("arm {arm} has {available} units, fewer than the requested subsample size {requested}")]
    ArmTooSmall {
        arm: u8,
        available: usize,
        requested: usize,
    },

    #[error("arm {0} is empty")]
    EmptyArm(u8),

    #[error("diameter bound {bound:.3e} unreachable within depth cap {max_depth} (bandwidth too small for the data range)")]
    DepthCapExceeded { bound: f64, max_depth: usize },

    #[error("no observation within kernel support of the query point (bandwidth too small there)")]
    EmptyNeighborhood,

    #[error("unit {0} has no imputed potential outcome")]
    MissingImputation(usize),

    #[error("k = {k} exceeds the opposite arm size {available}")]
    KnnTooLarge { k: usize, available: usize },

    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

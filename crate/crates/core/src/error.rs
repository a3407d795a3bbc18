use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("channel estimate has zero norm")]
    ZeroNormEstimate,

    #[error("user {user} is not a residual member of factor node (slot {slot}, pilot {pilot})")]
    NotInNode {
        user: usize,
        slot: usize,
        pilot: usize,
    },

    #[error("degree distribution has zero mean")]
    ZeroMeanDistribution,

    #[error("invalid degree distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid sweep specification: {0}")]
    InvalidSweep(String),

    #[error("ideal channel model needs at least {needed} antennas, got {antennas}")]
    TooFewAntennas { needed: usize, antennas: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

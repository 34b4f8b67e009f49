use thiserror::Error;

#[derive(Debug, Error)]
pub enum SenseError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("timing offset {d} outside [0, {max}]")]
    InvalidOffset { d: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("support index {index} outside [1, {n_sub}]")]
    SupportOutOfRange { index: usize, n_sub: usize },

    #[error("duplicate support index {0}")]
    DuplicateSupport(usize),

    #[error("atom index {index} outside [1, {n_sub}]")]
    AtomOutOfRange { index: usize, n_sub: usize },

    #[error("restricted dictionary is rank deficient at offset {d} (rank {rank} < {cols})")]
    RankDeficient { d: usize, rank: usize, cols: usize },

    #[error("brute-force spark limited to {limit} columns, got {cols}")]
    SparkGuard { cols: usize, limit: usize },

    #[error("matrix must have full column rank (rank {rank} < {cols})")]
    NotFullColumnRank { rank: usize, cols: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("trial with seed {seed} failed: {source}")]
    Trial {
        seed: u64,
        #[source]
        source: Box<SenseError>,
    },
}

pub type Result<T> = std::result::Result<T, SenseError>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameter `{field}`: {reason}")]
    InvalidModel { field: &'static str, reason: String },

    #[error("empty symmetry sector: {0}")]
    EmptySector(String),

    #[error("invalid sparse matrix: {0}")]
    InvalidSparse(String),

    #[error("eigensolver failed to converge (block of size {dim}, index {index})")]
    NoConvergence { dim: usize, index: usize },

    #[error("window count {count} out of range for dimension {dim}")]
    WindowOutOfRange { count: usize, dim: usize },

    #[error("invalid bin grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate coupling statistics: {0}")]
    DegenerateStats(String),

    #[error("no coupled pairs available: {0}")]
    NoPairs(&'static str),

    #[error("isolated initial state {0}")]
    IsolatedState(usize),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("too few levels: need at least {needed}, got {got}")]
    TooFewLevels { needed: usize, got: usize },

    #[error("ill-conditioned staircase fit (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config validation error in `{field}`: {reason}")]
    ConfigInvalid { field: String, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

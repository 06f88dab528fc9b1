use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("target column `{0}` not found")]
    MissingTarget(String),

    #[error("only {0} complete rows; at least 2 are required")]
    TooFewRows(usize),

    #[error("constant column `{0}` cannot be standardized")]
    ConstantColumn(String),

    #[error("nonpositive response {value} at row {row}")]
    NonPositiveResponse { row: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("rank-deficient submodel {indices:?} (diagonal ratio {ratio:.3e})")]
    RankDeficient { indices: Vec<usize>, ratio: f64 },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("draw file row {row}: {message}")]
    DrawFormat { row: usize, message: String },

    #[error("search budget exceeded: {0} subsets (limit {1})")]
    Budget(u128, u128),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::MissingTarget(_) => "missing-target",
            Error::TooFewRows(_) => "too-few-rows",
            Error::ConstantColumn(_) => "constant-column",
            Error::NonPositiveResponse { .. } => "nonpositive-response",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Dimension(_) => "dimension",
            Error::RankDeficient { .. } => "rank-deficient",
            Error::Degenerate(_) => "degenerate",
            Error::DrawFormat { .. } => "draw-format",
            Error::Budget(..) => "budget",
            Error::Config(_) => "config",
            Error::Json(_) => "json",
        }
    }
}

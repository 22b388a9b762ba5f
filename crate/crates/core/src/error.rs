use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is outside the domain required by the operation. The
    /// message names the violated constraint.
    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(
        "circulant embedding has eigenvalue {value:e} below tolerance (largest {largest:e}); \
         use the exact method instead"
    )]
    CirculantEmbedding { value: f64, largest: f64 },

    #[error("degenerate quantity: {0}")]
    Degenerate(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    pub(crate) fn constraint(msg: impl Into<String>) -> Self {
        Error::Constraint(msg.into())
    }
}

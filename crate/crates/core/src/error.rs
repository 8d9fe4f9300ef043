use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A DVFT file or byte buffer is malformed.
    #[error("{0}")]
    Format(String),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid manifest: {0}")]
    Manifest(String),

    /// The regularized kernel is not numerically positive definite.
    #[error("cholesky factorization failed at pivot {pivot} (alpha = {alpha:e}): kernel is rank-degenerate for this penalty")]
    Factorization { pivot: usize, alpha: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    /// An upstream stage's output is absent.
    #[error("missing input: {0}")]
    Missing(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("unsupported format in {path}: {detail}")]
    UnsupportedFormat { path: PathBuf, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what} in {path}: {message}")]
    Malformed {
        what: &'static str,
        path: PathBuf,
        message: String,
    },

    #[error("trajectory leaves the {size}x{size} kernel grid (extent {extent:.3} px from center, limit {limit:.3})")]
    OutOfSupport { size: usize, extent: f64, limit: f64 },

    #[error("missing label: {0}")]
    MissingLabel(String),

    #[error("comparator failed on pair ({i}, {j}): {message}")]
    Comparator { i: usize, j: usize, message: String },

    #[error("degenerate pair ({i}, {j}): f(i,j) + f(j,i) = 0")]
    DegeneratePair { i: usize, j: usize },

    #[error("tied ground-truth scores at items {i} and {j}")]
    Tie { i: usize, j: usize },

    #[error("degenerate likelihood at item {item}: {reason}")]
    DegenerateLikelihood { item: usize, reason: String },

    #[error("reconstruction is not real: max imaginary residual {max_imag:e}")]
    NonReal { max_imag: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    /// The mesh (or the domain it describes) degenerates near abscissa `xi`.
    #[error("degenerate geometry at xi = {xi}: {reason}")]
    Geometry { xi: f64, reason: String },

    #[error("linear solver failed: {0}")]
    Solver(String),

    /// A fixed-point iteration ran out of iterations. `history` holds the
    /// relative increment of every iteration performed.
    #[error("{what} did not converge in {iters} iterations (last increment {last:.3e})")]
    NonConvergence {
        what: &'static str,
        iters: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("invalid configuration value for `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: parse error: {reason}")]
    Parse { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

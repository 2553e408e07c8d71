use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the transform, prior, pruning and restoration layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("node at level 0 has no parent")]
    NoParent,

    #[error("node at level {level} is on the bottom level (depth {depth}) and has no children")]
    NoChildren { level: usize, depth: usize },

    #[error("oracle capacity exceeded: {0}")]
    Capacity(String),

    #[error("relative error undefined for a zero reference signal")]
    ZeroReference,

    #[error("iteration diverged at step {iteration}: iterate norm {norm:.3e} exceeds {limit:.3e}")]
    Divergence {
        iteration: usize,
        norm: f64,
        limit: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

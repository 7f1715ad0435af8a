use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph has {components} connected components; increase the neighbor count")]
    DisconnectedGraph { components: usize },

    #[error("point {index} has {coincident} coincident neighbors, exhausting k = {k}")]
    DuplicatePoints {
        index: usize,
        coincident: usize,
        k: usize,
    },

    #[error("coordinate {index} has zero variance")]
    DegenerateData { index: usize },

    #[error("invalid weight matrix: {0}")]
    InvalidGraph(String),

    #[error("scale {scale} made no coarsening progress ({size} clusters)")]
    TooManyScales { scale: usize, size: usize },

    #[error("eigensolver did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite activation at layer {layer}")]
    NonFinite { layer: usize },

    #[error("backward called without a forward cache")]
    MissingCache,

    #[error("bad magic number {found:#010x} in {path} (expected {expected:#010x})")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("truncated file {path}: {detail}")]
    TruncatedFile { path: PathBuf, detail: String },

    #[error("degenerate covariance after {attempts} redraws")]
    DegenerateCovariance { attempts: usize },

    #[error("parse error at token {position} ({token:?}): {message}")]
    Parse {
        position: usize,
        token: String,
        message: String,
    },

    #[error("width mismatch: {0}")]
    WidthMismatch(String),

    #[error("layer {index} is out of range or has no filters")]
    BadLayerIndex { index: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed file {path}: {detail}")]
    Format { path: PathBuf, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::ConvergenceFailure(_) | Error::DegenerateCovariance { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

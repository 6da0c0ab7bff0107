use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimensions must be even, got {width}x{height}")]
    OddDimension { width: usize, height: usize },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("inverse transform is not real: imaginary residual {residual:e} exceeds {limit:e}")]
    NonRealResult { residual: f64, limit: f64 },

    #[error("negative magnitude {value} at bin {index}")]
    NegativeMagnitude { index: usize, value: f64 },

    #[error("alpha {0} outside [0, sqrt(2)]")]
    InvalidAlpha(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mask is not binary")]
    NonBinaryMask,

    #[error("no readable images in {0}")]
    EmptyDirectory(PathBuf),

    #[error("cannot read image {path}: {reason}")]
    UnreadableImage { path: PathBuf, reason: String },

    #[error("empty input list: {0}")]
    EmptyList(&'static str),

    #[error("split {train}+{val} does not match {total} records")]
    SplitMismatch {
        train: usize,
        val: usize,
        total: usize,
    },

    #[error("dataset aborted after writing {written} of {total} records: {source}")]
    PartialOutput {
        written: usize,
        total: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot encode {path}: {reason}")]
    Encode { path: PathBuf, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the filesystem or file contents rather
    /// than by invalid parameters.
    pub fn is_io(&self) -> bool {
        match self {
            Error::EmptyDirectory(_)
            | Error::UnreadableImage { .. }
            | Error::Io { .. }
            | Error::Encode { .. }
            | Error::Json(_) => true,
            Error::PartialOutput { source, .. } => source.is_io(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

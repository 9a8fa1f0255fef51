use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for a set of {len} segments")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("coordinate arrays differ in length: {0:?}")]
    LengthMismatch([usize; 4]),

    #[error("non-finite segment coordinate at row {0}")]
    NonFinite(usize),

    #[error("downsampled image {width}x{height} is smaller than the 8x8 minimum")]
    ImageTooSmall { width: usize, height: usize },

    #[error("edge map contains no edge pixels")]
    NoEdges,

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("frame {index}: {reason}")]
    Frame { index: u64, reason: String },

    #[error("missing frame {0} in numbered sequence")]
    MissingFrame(u64),

    #[error("unsupported frame source: {0}")]
    UnsupportedSource(String),

    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: u64, reason: String },

    #[error("duplicate frame index {0}")]
    DuplicateFrame(u64),

    #[error("frame indices without a match: {0:?}")]
    Unmatched(Vec<u64>),

    #[error("cannot summarize an empty error list")]
    EmptyInput,

    #[error("{0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            reason: reason.into(),
        }
    }

    /// Soft failures skip the frame but leave the stream running.
    pub fn is_soft(&self) -> bool {
        matches!(self, Error::NoEdges | Error::ImageTooSmall { .. })
    }
}

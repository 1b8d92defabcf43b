use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image is empty")]
    EmptyImage,

    #[error("expected {expected} channel(s), found {found}")]
    ChannelCount { expected: usize, found: usize },

    #[error("single-channel input has no color planes; use the gray path")]
    GrayInput,

    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },

    #[error("odd dimensions {width}x{height}; pad to even size before the wavelet transform")]
    OddDimensions { width: usize, height: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inconsistent structure: {0}")]
    Structure(String),

    #[error("{0}")]
    Undefined(&'static str),

    #[error("patch (row {row}, col {col}, {channel}): {reason}")]
    ExternalPatch {
        row: usize,
        col: usize,
        channel: String,
        reason: String,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(a: (usize, usize), b: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            left_width: a.0,
            left_height: a.1,
            right_width: b.0,
            right_height: b.1,
        }
    }
}

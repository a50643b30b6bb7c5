use std::path::PathBuf;

use crate::raster::ColorSpace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("expected a {expected:?} image, got {found:?}")]
    ColorSpace {
        expected: ColorSpace,
        found: ColorSpace,
    },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("empty image")]
    EmptyImage,
    #[error("mask has no foreground pixels")]
    EmptyMask,
    #[error("segmentation failed: {0}")]
    SegmentationFailure(String),
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),
    #[error("undefined value: {0}")]
    Undefined(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("fold leakage: sample {0} appears in both the training and held-out folds")]
    Leakage(usize),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("failed to decode {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
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
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SeeError>;

#[derive(Debug, Error)]
pub enum SeeError {
    #[error("dimension mismatch: expected {expected_h}x{expected_w}, got {got_h}x{got_w}")]
    DimensionMismatch {
        expected_h: usize,
        expected_w: usize,
        got_h: usize,
        got_w: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ground truth has no positive pixel")]
    EmptyGroundTruth,

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("unsupported image format in {}: {reason}", path.display())]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("zero-sized image: {}", .0.display())]
    ZeroSized(PathBuf),

    #[error("incomplete dataset: {0}")]
    Dataset(String),

    #[error("saliency provider failed: {0}")]
    Provider(String),

    #[error("image codec error for {}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("I/O error for {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl SeeError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SeeError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn mismatch(expected: (usize, usize), got: (usize, usize)) -> Self {
        SeeError::DimensionMismatch {
            expected_h: expected.0,
            expected_w: expected.1,
            got_h: got.0,
            got_w: got.1,
        }
    }

    /// Whether the error stems from bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            SeeError::DimensionMismatch { .. }
                | SeeError::InvalidParameter(_)
                | SeeError::EmptyGroundTruth
                | SeeError::MissingFile(_)
                | SeeError::UnsupportedFormat { .. }
                | SeeError::ZeroSized(_)
                | SeeError::Dataset(_)
        )
    }
}

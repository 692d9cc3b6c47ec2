use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: cannot decode image: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("cannot encode image: {0}")]
    Encode(#[from] image::ImageError),

    #[error("{path}: expected a single-channel image, got {color:?}")]
    NotGrayscale { path: PathBuf, color: image::ColorType },

    #[error("label map has {0} regions, 16-bit PNG holds at most 65536")]
    TooManyLabels(usize),

    #[error("feature tensor: bad magic {0:?}, expected \"HSPF\"")]
    BadMagic([u8; 4]),

    #[error("feature tensor is {found_w}x{found_h}, image is {expected_w}x{expected_h}")]
    TensorDimensions {
        expected_w: usize,
        expected_h: usize,
        found_w: usize,
        found_h: usize,
    },

    #[error("feature tensor truncated: need {expected} bytes, have {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid file contents: {0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] nestseg_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use crate::raster::ColorSpace;

/// Errors produced anywhere in the recognition pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("expected {expected:?} image, got {actual:?}")]
    WrongColorSpace {
        expected: ColorSpace,
        actual: ColorSpace,
    },

    #[error("unsupported color space {0:?} for this operation")]
    UnsupportedColorSpace(ColorSpace),

    #[error("empty plane")]
    EmptyPlane,

    #[error("plane is {width}x{height}, need at least {min_width}x{min_height}")]
    TooSmall {
        width: usize,
        height: usize,
        min_width: usize,
        min_height: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero-norm input: correction coefficient is undefined")]
    ZeroNorm,

    #[error("no skin region")]
    NoSkinRegion,

    #[error("vector has zero variance; cross-correlation is undefined")]
    ZeroVariance,

    #[error("class discrimination is undefined: {0}")]
    UndefinedDiscrimination(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("incompatible gallery: {0}")]
    IncompatibleGallery(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("subject {0:?} has no usable images")]
    SubjectWithoutImages(String),

    #[error("corrupt gallery file at line {line}: {reason}")]
    CorruptGallery { line: usize, reason: String },

    #[error("unsupported gallery format version {0:?}")]
    UnsupportedGalleryVersion(String),

    #[error("invalid config at {origin}: {reason}")]
    Config { origin: String, reason: String },

    #[error("failed to decode image {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

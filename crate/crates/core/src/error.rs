//! Crate-wide error type.
//!
//! Variants are grouped by the pipeline stage that raises them; [`Error::kind`]
//! folds them into the coarse taxonomy used for CLI exit codes and FFI status
//! codes.

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    // imaging
    #[error("malformed image file: {0}")]
    MalformedFile(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("degenerate output size {width}x{height}")]
    DegenerateSize { width: usize, height: usize },
    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    // segmentation
    #[error("bad kernel: {0}")]
    BadKernel(String),
    #[error("contour list is empty")]
    NoContours,
    #[error("no ROI found")]
    NoRoiFound,

    // features
    #[error("color channel {0} outside [0, 1]")]
    OutOfGamut(f64),
    #[error("grid too small for requested transform: {0}")]
    TooSmall(String),
    #[error("no pixel pairs for GLCM offset ({dx}, {dy})")]
    NoPairs { dx: i32, dy: i32 },
    #[error("image is empty")]
    EmptyImage,
    #[error("no feature family enabled")]
    NoFeatures,

    // classifiers
    #[error("class {0:?} has no training samples")]
    MissingClass(String),
    #[error("feature schema mismatch: expected {expected}, got {actual}")]
    SchemaMismatch { expected: String, actual: String },
    #[error("unsupported model format version {0}")]
    VersionMismatch(u32),
    #[error("corrupt model document: {0}")]
    CorruptModel(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    // evaluation
    #[error("stratification impossible: class {class} has {count} samples for k = {k}")]
    StratificationImpossible { class: usize, count: usize, k: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("confusion matrix is empty")]
    EmptyMatrix,

    // dataset
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
    #[error("missing image {0}")]
    MissingImage(PathBuf),
    #[error("extraction aborted at {path}: {source}")]
    AbortOnError {
        path: String,
        #[source]
        source: Box<Error>,
    },
    #[error("{failed} of {total} images failed extraction (limit 5%)")]
    TooManyFailures { failed: usize, total: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// Coarse error classes shared by the CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Io,
    Pipeline,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Io => 3,
            ErrorKind::Pipeline => 4,
            ErrorKind::Internal => 5,
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Io { .. } | MissingImage(_) => ErrorKind::Io,
            InvalidConfig(_)
            | BadKernel(_)
            | MalformedManifest(_)
            | VersionMismatch(_)
            | CorruptModel(_)
            | SchemaMismatch { .. }
            | NoFeatures => ErrorKind::Config,
            Internal(_) => ErrorKind::Internal,
            AbortOnError { source, .. } => source.kind(),
            _ => ErrorKind::Pipeline,
        }
    }
}

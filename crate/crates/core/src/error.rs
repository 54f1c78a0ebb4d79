use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("mesh has no UV coordinates")]
    MissingUvs,

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(&'static str),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("overlapping UV charts: faces {first} and {second} both cover texel ({x}, {y})")]
    OverlappingUv {
        first: usize,
        second: usize,
        x: usize,
        y: usize,
    },

    #[error("source view has no foreground pixels")]
    EmptyGuidanceSource,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("content hash mismatch: expected {expected}, found {found}")]
    HashMismatch { expected: String, found: String },

    #[error("empty mask")]
    EmptyMask,

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("exr error: {0}")]
    Exr(#[from] exr::error::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::MissingUvs
                | Error::InvalidArgument(_)
                | Error::HashMismatch { .. }
                | Error::FileNotFound(_)
        )
    }
}

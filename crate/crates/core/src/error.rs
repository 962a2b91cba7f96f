use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("voxel index ({0}, {1}, {2}) out of bounds")]
    OutOfBounds(usize, usize, usize),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("grid geometries differ")]
    GeometryMismatch,
    #[error("malformed volume file: {0}")]
    Format(String),
    #[error("invalid centerline: {0}")]
    InvalidCenterline(String),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("invalid trace parameters: {0}")]
    InvalidParams(String),
    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),
    #[error("no rib cage found")]
    NoRibCage,
    #[error("no ribs detected")]
    NoRibsDetected,
    #[error("evaluation needs at least one case")]
    NoCases,
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for outcomes where the algorithm ran but found nothing.
    pub fn is_not_found(&self) -> bool {
        matches!(self, Error::NoRibCage | Error::NoRibsDetected)
    }
}

use thiserror::Error;

use crate::grassmann::GrassmannError;
use crate::ring::RingError;
use crate::structure::StructureError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
    /// invalid parameters; reported before any computation starts
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

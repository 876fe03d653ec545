use thiserror::Error;

use crate::states::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index error: {0}")]
    Index(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    /// A quantity that must be real came out with a significant imaginary part.
    #[error("numerical integrity error: {0}")]
    Numerical(String),

    #[error("invalid state: {0}")]
    InvalidState(ValidationReport),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Empty grid or a shape whose product does not match the value count.
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: String, right: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The quantity is mathematically undefined for this input (zero union, zero CE, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A numerical routine was asked to work outside its accuracy envelope.
    #[error("numerical envelope exceeded: {0}")]
    Envelope(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn mismatch(left: impl std::fmt::Debug, right: impl std::fmt::Debug) -> Self {
        Error::ShapeMismatch {
            left: format!("{left:?}"),
            right: format!("{right:?}"),
        }
    }
}

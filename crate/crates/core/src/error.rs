use std::io;

use thiserror::Error;

/// Errors produced by the denoising toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    /// Bad magic, unknown dtype code, malformed run-length encoding or JSON.
    #[error("format error: {0}")]
    Format(String),

    /// Payload length disagrees with the header.
    #[error("corrupt file: {0}")]
    Corruption(String),

    /// The file holds a different grid kind than the caller asked for.
    #[error("type error: expected {expected}, found {found}")]
    Type {
        expected: &'static str,
        found: &'static str,
    },

    /// A grid or input violates the invariants of its type.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A label has no entry in the class map.
    #[error("label {0} is missing from the class map")]
    Mapping(u16),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no valid pixels to build features from")]
    EmptyInput,

    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors produced by the hypervector algebra, encoders, solver and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensionality: {0} (must be at least 1)")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resonator dynamics diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("arithmetic overflow while computing {0}")]
    Overflow(&'static str),

    #[error("unknown output format `{0}` (expected json or csv)")]
    UnknownFormat(String),

    #[error("malformed codebook file: {0}")]
    CodebookFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input fell outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed call arguments (lengths, counts, empty grids).
    #[error("argument error: {0}")]
    Argument(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("configuration error: {0}")]
    Config(String),
    /// A threshold contour reached the edge of the evaluation grid.
    #[error("grid extent error: {0}")]
    Extent(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

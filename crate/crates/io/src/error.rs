use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", .path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported image: {0}")]
    UnsupportedImage(String),

    #[error("image decode failed: {0}")]
    Decode(String),

    #[error("corrupt bundle: {0}")]
    CorruptBundle(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] pigment_core::Error),
}

pub type Result<T> = std::result::Result<T, IoError>;

pub(crate) fn file_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> IoError {
    let path = path.into();
    move |source| IoError::File { path, source }
}

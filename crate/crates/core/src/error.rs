//! Error type shared by every module of the crate.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("NIfTI parse error in {path}: field `{field}` at byte {offset}: {reason}")]
    NiftiParse {
        path: PathBuf,
        field: &'static str,
        offset: usize,
        reason: String,
    },

    #[error("NIfTI parse error in {path}: unsupported datatype code {code} at byte 70 (supported: 2=uint8, 4=int16, 16=float32)")]
    UnsupportedDatatype { path: PathBuf, code: i16 },

    #[error("NIfTI parse error in {path}: truncated data section, expected {expected} bytes from offset {offset}, found {found}")]
    TruncatedData {
        path: PathBuf,
        offset: usize,
        expected: usize,
        found: usize,
    },

    #[error("NIfTI parse error in {path}: dimensions declare {declared} data bytes from offset {offset} but file holds {actual}")]
    SizeMismatch {
        path: PathBuf,
        offset: usize,
        declared: usize,
        actual: usize,
    },

    #[error("JSON error in {path} at `{json_path}`: {message}")]
    Json {
        path: PathBuf,
        json_path: String,
        message: String,
    },

    #[error("label error: {0}")]
    Label(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

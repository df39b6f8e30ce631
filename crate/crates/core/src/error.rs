use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Unwritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: unsupported audio encoding ({detail})")]
    UnsupportedCodec { path: PathBuf, detail: String },

    #[error("{path}: malformed WAV data ({detail})")]
    MalformedWav { path: PathBuf, detail: String },

    #[error("{0}: file contains no audio samples")]
    EmptyAudio(PathBuf),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample rate mismatch: expected {expected} Hz, got {found} Hz")]
    RateMismatch { expected: u32, found: u32 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("frame starting at sample {start} needs {needed} samples but the signal has {len}")]
    FrameOutOfRange {
        start: usize,
        needed: usize,
        len: usize,
    },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("{0} must be sorted in ascending order")]
    Unsorted(&'static str),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("notes {first} and {second} overlap")]
    OverlappingNotes { first: usize, second: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

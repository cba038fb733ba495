use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("motion vector ({dx}, {dy}) of block {block} leaves the reference frame")]
    OutOfBounds { block: usize, dx: i32, dy: i32 },

    #[error("sample {value} at index {index} of frame {frame} is outside the {bit_depth}-bit range")]
    SampleRange {
        frame: usize,
        index: usize,
        value: i64,
        bit_depth: u8,
    },

    #[error("malformed data at byte {offset}: {message}")]
    Malformed { offset: usize, message: String },

    #[error("short input for frame {frame}: need {needed} bytes, have {available}")]
    ShortInput {
        frame: usize,
        needed: usize,
        available: usize,
    },

    #[error("empty sequence")]
    EmptySequence,

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn malformed(offset: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            offset,
            message: message.into(),
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, OmvError>;

#[derive(Debug, Error)]
pub enum OmvError {
    #[error("coordinate ({row}, {col}) out of range for {rows}x{cols} matrix")]
    CoordOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown or deleted id {0}")]
    UnknownId(u64),

    #[error("matrix has {count} distinct values, more than the cap of {cap}")]
    TooManyValues { count: usize, cap: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("graph is disconnected")]
    Disconnected,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl OmvError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        OmvError::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(OmvError::DimensionMismatch { expected, actual })
    }
}

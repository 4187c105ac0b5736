use thiserror::Error;

pub type Result<T, E = KashinError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum KashinError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(usize),

    #[error("unsupported dimension {dim}: {reason}")]
    UnsupportedDimension { dim: usize, reason: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("dimension {dim} exceeds the dense materialization cap {cap}")]
    ResourceLimit { dim: usize, cap: usize },

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl KashinError {
    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Self::Shape {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

/// Errors raised while parsing or validating on-disk and in-memory artifacts.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: Vec<u8> },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),

    #[error("truncated data: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },

    #[error("trailing bytes after payload: {0}")]
    TrailingBytes(usize),

    #[error("crc mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },

    #[error("payload checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },

    #[error("unknown transform kind {0}")]
    UnknownTransformKind(u8),

    #[error("truncated code stream: need {needed} bytes, have {available}")]
    TruncatedCodes { needed: usize, available: usize },

    #[error("malformed data: {0}")]
    Malformed(String),
}

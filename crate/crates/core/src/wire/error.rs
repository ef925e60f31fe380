use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("payload of {0} bytes exceeds the frame limit of 2^31-1 bytes")]
    Oversize(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeErrorKind {
    #[error("truncated frame")]
    TruncatedFrame,
    #[error("frame declares {declared} payload bytes but {actual} follow the header")]
    FrameLengthMismatch { declared: usize, actual: usize },
    #[error("declared payload length {0} exceeds the frame limit")]
    FrameTooLarge(u32),
    #[error("unknown message kind 0x{0:02X}")]
    UnknownMessageKind(u8),
    #[error("unknown dtype tag {0}")]
    UnknownDType(u8),
    #[error("unknown episode state {0}")]
    UnknownEpisodeState(u8),
    #[error("tensor shape requires more data than the frame holds")]
    ShapeDataMismatch,
    #[error("string is not valid UTF-8")]
    InvalidUtf8,
    #[error("boolean byte {0} is neither 0 nor 1")]
    InvalidBool(u8),
    #[error("map keys are not strictly ascending")]
    UnsortedKeys,
    #[error("duplicate uid {0} in spec list")]
    DuplicateUid(u32),
    #[error("bounded actuator has min > max")]
    InvalidBounds,
    #[error("{0} trailing bytes after message body")]
    TrailingBytes(usize),
}

/// Decoding failure at a byte offset measured from the start of the frame
/// (the first byte of the length prefix).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte offset {offset}")]
pub struct DecodeError {
    pub offset: usize,
    pub kind: DecodeErrorKind,
}

impl DecodeError {
    pub fn new(offset: usize, kind: DecodeErrorKind) -> DecodeError {
        DecodeError { offset, kind }
    }
}

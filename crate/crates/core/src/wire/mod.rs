//! Bit-exact message schema, tensor encoding and stream framing shared by
//! agents and the environment server. `protocol.md` at the repository root
//! is the normative description of the byte layout.

mod codec;
mod error;
mod message;
mod tensor;

pub use codec::{
    decode_message, decode_payload, encode_message, peek_sequence, read_frame, write_message,
    MAX_PAYLOAD_LEN, PAYLOAD_HEADER_LEN,
};
pub use error::{DecodeError, DecodeErrorKind, EncodeError};
pub use message::{
    kind, ActuatorSpec, Body, EpisodeStateTag, ErrorCode, Message, SensorSpec, Settings, SpecSet,
    Uid,
};
pub use tensor::{element_count, DType, ShapeError, Tensor, TensorData};

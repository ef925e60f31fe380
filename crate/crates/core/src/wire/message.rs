use std::collections::BTreeMap;

use super::tensor::{DType, Tensor};

/// Actuator/sensor identifier, dense from 1 within one avatar.
pub type Uid = u32;

/// Named settings passed on world creation, join and reset.
pub type Settings = BTreeMap<String, Tensor>;

/// Error codes carried by [`Body::Error`]. Values follow the gRPC canonical
/// numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u32)]
pub enum ErrorCode {
    InvalidArgument = 3,
    NotFound = 5,
    ResourceExhausted = 8,
    FailedPrecondition = 9,
    Internal = 13,
}

impl ErrorCode {
    pub fn code(self) -> u32 {
        self as u32
    }

    pub fn from_code(code: u32) -> Option<ErrorCode> {
        Some(match code {
            3 => ErrorCode::InvalidArgument,
            5 => ErrorCode::NotFound,
            8 => ErrorCode::ResourceExhausted,
            9 => ErrorCode::FailedPrecondition,
            13 => ErrorCode::Internal,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum EpisodeStateTag {
    Running = 0,
    Terminated = 1,
    Interrupted = 2,
}

impl EpisodeStateTag {
    pub fn from_tag(tag: u8) -> Option<EpisodeStateTag> {
        Some(match tag {
            0 => EpisodeStateTag::Running,
            1 => EpisodeStateTag::Terminated,
            2 => EpisodeStateTag::Interrupted,
            _ => return None,
        })
    }

    pub fn is_terminal(self) -> bool {
        !matches!(self, EpisodeStateTag::Running)
    }
}

#[derive(Debug, Clone)]
pub struct ActuatorSpec {
    pub uid: Uid,
    pub name: String,
    pub dtype: DType,
    pub shape: Vec<u32>,
    pub min: f64,
    pub max: f64,
    pub bounded: bool,
}

impl PartialEq for ActuatorSpec {
    fn eq(&self, other: &Self) -> bool {
        self.uid == other.uid
            && self.name == other.name
            && self.dtype == other.dtype
            && self.shape == other.shape
            && self.min.to_bits() == other.min.to_bits()
            && self.max.to_bits() == other.max.to_bits()
            && self.bounded == other.bounded
    }
}

impl Eq for ActuatorSpec {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorSpec {
    pub uid: Uid,
    pub name: String,
    pub dtype: DType,
    pub shape: Vec<u32>,
}

/// Everything an agent may act with and observe after joining.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpecSet {
    pub actuators: Vec<ActuatorSpec>,
    pub sensors: Vec<SensorSpec>,
}

impl SpecSet {
    pub fn actuator(&self, name: &str) -> Option<&ActuatorSpec> {
        self.actuators.iter().find(|a| a.name == name)
    }

    pub fn sensor(&self, name: &str) -> Option<&SensorSpec> {
        self.sensors.iter().find(|s| s.name == name)
    }
}

/// Kind-specific message record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Body {
    CreateWorldRequest { settings: Settings },
    CreateWorldResponse { world_name: String },
    JoinWorldRequest { world_name: String, settings: Settings },
    JoinWorldResponse { specs: SpecSet },
    StepRequest {
        actions: BTreeMap<Uid, Tensor>,
        requested_observations: Vec<Uid>,
    },
    StepResponse {
        state: EpisodeStateTag,
        observations: BTreeMap<Uid, Tensor>,
    },
    ResetRequest { settings: Settings },
    ResetResponse { specs: SpecSet },
    ResetWorldRequest,
    ResetWorldResponse,
    LeaveWorldRequest,
    LeaveWorldResponse,
    DestroyWorldRequest { world_name: String },
    DestroyWorldResponse,
    Error { code: u32, message: String },
}

/// Message kind tag bytes. Responses set the high bit of their request's tag.
pub mod kind {
    pub const CREATE_WORLD_REQUEST: u8 = 0x01;
    pub const JOIN_WORLD_REQUEST: u8 = 0x02;
    pub const STEP_REQUEST: u8 = 0x03;
    pub const RESET_REQUEST: u8 = 0x04;
    pub const RESET_WORLD_REQUEST: u8 = 0x05;
    pub const LEAVE_WORLD_REQUEST: u8 = 0x06;
    pub const DESTROY_WORLD_REQUEST: u8 = 0x07;
    pub const RESPONSE_BIT: u8 = 0x80;
    pub const CREATE_WORLD_RESPONSE: u8 = CREATE_WORLD_REQUEST | RESPONSE_BIT;
    pub const JOIN_WORLD_RESPONSE: u8 = JOIN_WORLD_REQUEST | RESPONSE_BIT;
    pub const STEP_RESPONSE: u8 = STEP_REQUEST | RESPONSE_BIT;
    pub const RESET_RESPONSE: u8 = RESET_REQUEST | RESPONSE_BIT;
    pub const RESET_WORLD_RESPONSE: u8 = RESET_WORLD_REQUEST | RESPONSE_BIT;
    pub const LEAVE_WORLD_RESPONSE: u8 = LEAVE_WORLD_REQUEST | RESPONSE_BIT;
    pub const DESTROY_WORLD_RESPONSE: u8 = DESTROY_WORLD_REQUEST | RESPONSE_BIT;
    pub const ERROR_RESPONSE: u8 = 0xFF;
}

impl Body {
    pub fn tag(&self) -> u8 {
        use kind::*;
        match self {
            Body::CreateWorldRequest { .. } => CREATE_WORLD_REQUEST,
            Body::CreateWorldResponse { .. } => CREATE_WORLD_RESPONSE,
            Body::JoinWorldRequest { .. } => JOIN_WORLD_REQUEST,
            Body::JoinWorldResponse { .. } => JOIN_WORLD_RESPONSE,
            Body::StepRequest { .. } => STEP_REQUEST,
            Body::StepResponse { .. } => STEP_RESPONSE,
            Body::ResetRequest { .. } => RESET_REQUEST,
            Body::ResetResponse { .. } => RESET_RESPONSE,
            Body::ResetWorldRequest => RESET_WORLD_REQUEST,
            Body::ResetWorldResponse => RESET_WORLD_RESPONSE,
            Body::LeaveWorldRequest => LEAVE_WORLD_REQUEST,
            Body::LeaveWorldResponse => LEAVE_WORLD_RESPONSE,
            Body::DestroyWorldRequest { .. } => DESTROY_WORLD_REQUEST,
            Body::DestroyWorldResponse => DESTROY_WORLD_RESPONSE,
            Body::Error { .. } => ERROR_RESPONSE,
        }
    }

    pub fn is_request(&self) -> bool {
        self.tag() & kind::RESPONSE_BIT == 0
    }

    /// Whether `response` is an admissible answer to this request.
    pub fn answers(&self, response: &Body) -> bool {
        matches!(response, Body::Error { .. }) || response.tag() == self.tag() | kind::RESPONSE_BIT
    }

    pub fn error(code: ErrorCode, message: impl Into<String>) -> Body {
        Body::Error { code: code.code(), message: message.into() }
    }
}

/// Wire envelope: a body plus the sequence number pairing responses with
/// requests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub sequence: u64,
    pub body: Body,
}

impl Message {
    pub fn new(sequence: u64, body: Body) -> Message {
        Message { sequence, body }
    }
}

//! Minimal blocking client speaking the wire protocol directly. Used by the
//! benchmark and the integration tests.

use std::collections::BTreeMap;
use std::io::{self, BufReader, BufWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};

use thiserror::Error;

use crate::wire::{
    decode_payload, encode_message, read_frame, Body, DecodeError, EpisodeStateTag, ErrorCode,
    Message, Settings, SpecSet, Tensor, Uid, MAX_PAYLOAD_LEN,
};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("decode: {0}")]
    Decode(#[from] DecodeError),
    #[error("server closed the connection")]
    Closed,
    #[error("server error {code}: {message}")]
    Server { code: u32, message: String },
    #[error("expected reply to sequence {expected}, got {got}")]
    SequenceMismatch { expected: u64, got: u64 },
    #[error("unexpected reply {0:?}")]
    Unexpected(Box<Body>),
}

impl ClientError {
    pub fn code(&self) -> Option<ErrorCode> {
        match self {
            ClientError::Server { code, .. } => ErrorCode::from_code(*code),
            _ => None,
        }
    }
}

pub type Observations = BTreeMap<Uid, Tensor>;

pub struct Client {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    next_sequence: u64,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Client> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Client {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
            next_sequence: 1,
        })
    }

    pub fn stream(&self) -> &TcpStream {
        self.writer.get_ref()
    }

    /// Sequence number the next `send` will use.
    pub fn next_sequence(&self) -> u64 {
        self.next_sequence
    }

    /// Writes one request without waiting for the reply. Returns its
    /// sequence number.
    pub fn send(&mut self, body: Body) -> Result<u64, ClientError> {
        let seq = self.next_sequence;
        self.next_sequence += 1;
        self.send_with_sequence(seq, body)?;
        Ok(seq)
    }

    pub fn send_with_sequence(&mut self, sequence: u64, body: Body) -> Result<(), ClientError> {
        let frame = encode_message(&Message::new(sequence, body))
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        self.writer.write_all(&frame)?;
        self.writer.flush()?;
        Ok(())
    }

    /// Writes arbitrary bytes, for protocol-violation tests.
    pub fn send_raw(&mut self, bytes: &[u8]) -> io::Result<()> {
        self.writer.write_all(bytes)?;
        self.writer.flush()
    }

    pub fn recv(&mut self) -> Result<Message, ClientError> {
        let payload = read_frame(&mut self.reader, MAX_PAYLOAD_LEN)?.ok_or(ClientError::Closed)?;
        Ok(decode_payload(&payload)?)
    }

    /// Sends a request and waits for its reply; server errors become
    /// [`ClientError::Server`].
    pub fn call(&mut self, body: Body) -> Result<Body, ClientError> {
        let seq = self.send(body)?;
        let reply = self.recv()?;
        if reply.sequence != seq {
            return Err(ClientError::SequenceMismatch { expected: seq, got: reply.sequence });
        }
        match reply.body {
            Body::Error { code, message } => Err(ClientError::Server { code, message }),
            body => Ok(body),
        }
    }

    pub fn create_world(&mut self, settings: Settings) -> Result<String, ClientError> {
        match self.call(Body::CreateWorldRequest { settings })? {
            Body::CreateWorldResponse { world_name } => Ok(world_name),
            other => Err(ClientError::Unexpected(Box::new(other))),
        }
    }

    pub fn join_world(&mut self, world_name: &str, settings: Settings) -> Result<SpecSet, ClientError> {
        match self.call(Body::JoinWorldRequest { world_name: world_name.to_owned(), settings })? {
            Body::JoinWorldResponse { specs } => Ok(specs),
            other => Err(ClientError::Unexpected(Box::new(other))),
        }
    }

    pub fn step(
        &mut self,
        actions: BTreeMap<Uid, Tensor>,
        requested_observations: Vec<Uid>,
    ) -> Result<(EpisodeStateTag, Observations), ClientError> {
        match self.call(Body::StepRequest { actions, requested_observations })? {
            Body::StepResponse { state, observations } => Ok((state, observations)),
            other => Err(ClientError::Unexpected(Box::new(other))),
        }
    }

    pub fn reset(&mut self, settings: Settings) -> Result<SpecSet, ClientError> {
        match self.call(Body::ResetRequest { settings })? {
            Body::ResetResponse { specs } => Ok(specs),
            other => Err(ClientError::Unexpected(Box::new(other))),
        }
    }

    pub fn reset_world(&mut self) -> Result<(), ClientError> {
        match self.call(Body::ResetWorldRequest)? {
            Body::ResetWorldResponse => Ok(()),
            other => Err(ClientError::Unexpected(Box::new(other))),
        }
    }

    pub fn leave_world(&mut self) -> Result<(), ClientError> {
        match self.call(Body::LeaveWorldRequest)? {
            Body::LeaveWorldResponse => Ok(()),
            other => Err(ClientError::Unexpected(Box::new(other))),
        }
    }

    pub fn destroy_world(&mut self, world_name: &str) -> Result<(), ClientError> {
        match self.call(Body::DestroyWorldRequest { world_name: world_name.to_owned() })? {
            Body::DestroyWorldResponse => Ok(()),
            other => Err(ClientError::Unexpected(Box::new(other))),
        }
    }
}

/// Builds a settings map from string/tensor pairs.
pub fn settings<'a>(pairs: impl IntoIterator<Item = (&'a str, Tensor)>) -> Settings {
    pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

//! Frame encoder and decoder.
//!
//! All integers are little-endian. Strings are a `u32` byte length followed by
//! UTF-8. Maps are a `u32` entry count followed by entries in strictly
//! ascending key order. The decoder rejects anything the encoder could not
//! have produced, so `encode(decode(b)) == b` for every accepted frame.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use super::error::{DecodeError, DecodeErrorKind, EncodeError};
use super::message::{
    kind, ActuatorSpec, Body, EpisodeStateTag, Message, SensorSpec, Settings, SpecSet, Uid,
};
use super::tensor::{element_count, DType, Tensor, TensorData};

/// Largest permitted payload (frame minus the 4-byte length prefix).
pub const MAX_PAYLOAD_LEN: usize = (1 << 31) - 1;

/// Bytes before the body: tag (1) + sequence (8).
pub const PAYLOAD_HEADER_LEN: usize = 9;

const FRAME_PREFIX_LEN: usize = 4;

// ── encoding ────────────────────────────────────────────────────

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    // Lengths beyond u32 are truncated here but can never reach the wire:
    // the total payload check in `encode_message` rejects them first.
    fn len(&mut self, n: usize) {
        self.u32(n as u32);
    }

    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn shape(&mut self, shape: &[u32]) {
        self.u8(shape.len() as u8);
        for &d in shape {
            self.u32(d);
        }
    }

    fn tensor(&mut self, t: &Tensor) {
        self.u8(t.dtype().tag());
        self.shape(t.shape());
        match t.data() {
            TensorData::F32(v) => v.iter().for_each(|x| self.buf.extend_from_slice(&x.to_le_bytes())),
            TensorData::F64(v) => v.iter().for_each(|x| self.buf.extend_from_slice(&x.to_le_bytes())),
            TensorData::I32(v) => v.iter().for_each(|x| self.buf.extend_from_slice(&x.to_le_bytes())),
            TensorData::I64(v) => v.iter().for_each(|x| self.buf.extend_from_slice(&x.to_le_bytes())),
            TensorData::U8(v) => self.buf.extend_from_slice(v),
            TensorData::Bool(v) => v.iter().for_each(|&b| self.buf.push(u8::from(b))),
            TensorData::String(v) => v.iter().for_each(|s| self.str(s)),
        }
    }

    fn settings(&mut self, settings: &Settings) {
        self.len(settings.len());
        for (k, v) in settings {
            self.str(k);
            self.tensor(v);
        }
    }

    fn uid_map(&mut self, map: &BTreeMap<Uid, Tensor>) {
        self.len(map.len());
        for (uid, t) in map {
            self.u32(*uid);
            self.tensor(t);
        }
    }

    fn specs(&mut self, specs: &SpecSet) {
        self.len(specs.actuators.len());
        for a in &specs.actuators {
            self.u32(a.uid);
            self.str(&a.name);
            self.u8(a.dtype.tag());
            self.shape(&a.shape);
            self.f64(a.min);
            self.f64(a.max);
            self.u8(u8::from(a.bounded));
        }
        self.len(specs.sensors.len());
        for s in &specs.sensors {
            self.u32(s.uid);
            self.str(&s.name);
            self.u8(s.dtype.tag());
            self.shape(&s.shape);
        }
    }

    fn body(&mut self, body: &Body) {
        match body {
            Body::CreateWorldRequest { settings } => self.settings(settings),
            Body::CreateWorldResponse { world_name } => self.str(world_name),
            Body::JoinWorldRequest { world_name, settings } => {
                self.str(world_name);
                self.settings(settings);
            }
            Body::JoinWorldResponse { specs } => self.specs(specs),
            Body::StepRequest { actions, requested_observations } => {
                self.uid_map(actions);
                self.len(requested_observations.len());
                for &uid in requested_observations {
                    self.u32(uid);
                }
            }
            Body::StepResponse { state, observations } => {
                self.u8(*state as u8);
                self.uid_map(observations);
            }
            Body::ResetRequest { settings } => self.settings(settings),
            Body::ResetResponse { specs } => self.specs(specs),
            Body::ResetWorldRequest
            | Body::ResetWorldResponse
            | Body::LeaveWorldRequest
            | Body::LeaveWorldResponse
            | Body::DestroyWorldResponse => {}
            Body::DestroyWorldRequest { world_name } => self.str(world_name),
            Body::Error { code, message } => {
                self.u32(*code);
                self.str(message);
            }
        }
    }
}

/// Encodes `msg` as one length-prefixed frame.
pub fn encode_message(msg: &Message) -> Result<Vec<u8>, EncodeError> {
    let mut w = Writer { buf: Vec::with_capacity(64) };
    w.u32(0);
    w.u8(msg.body.tag());
    w.u64(msg.sequence);
    w.body(&msg.body);
    let payload_len = w.buf.len() - FRAME_PREFIX_LEN;
    if payload_len > MAX_PAYLOAD_LEN {
        return Err(EncodeError::Oversize(payload_len));
    }
    w.buf[..FRAME_PREFIX_LEN].copy_from_slice(&(payload_len as u32).to_le_bytes());
    Ok(w.buf)
}

// ── decoding ────────────────────────────────────────────────────

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    // offset of `buf[0]` within the frame, for error reporting
    base: usize,
}

type DResult<T> = Result<T, DecodeError>;

impl<'a> Reader<'a> {
    fn err(&self, kind: DecodeErrorKind) -> DecodeError {
        DecodeError::new(self.base + self.pos, kind)
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> DResult<&'a [u8]> {
        if self.remaining() < n {
            return Err(self.err(DecodeErrorKind::TruncatedFrame));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> DResult<[u8; N]> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    fn u8(&mut self) -> DResult<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> DResult<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> DResult<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> DResult<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn str(&mut self) -> DResult<String> {
        let len = self.u32()? as usize;
        let start = self.pos;
        let bytes = self.take(len)?;
        std::str::from_utf8(bytes)
            .map(str::to_owned)
            .map_err(|_| DecodeError::new(self.base + start, DecodeErrorKind::InvalidUtf8))
    }

    fn dtype(&mut self) -> DResult<DType> {
        let at = self.pos;
        let tag = self.u8()?;
        DType::from_tag(tag).ok_or(DecodeError::new(self.base + at, DecodeErrorKind::UnknownDType(tag)))
    }

    fn shape(&mut self) -> DResult<Vec<u32>> {
        let rank = self.u8()? as usize;
        (0..rank).map(|_| self.u32()).collect()
    }

    fn fixed<T, const N: usize>(&mut self, count: usize, f: impl Fn([u8; N]) -> T) -> DResult<Vec<T>> {
        let bytes = self.take(count * N)?;
        Ok(bytes
            .chunks_exact(N)
            .map(|c| {
                let mut a = [0u8; N];
                a.copy_from_slice(c);
                f(a)
            })
            .collect())
    }

    fn tensor(&mut self) -> DResult<Tensor> {
        let dtype = self.dtype()?;
        let shape = self.shape()?;
        let data_at = self.pos;
        let mismatch = DecodeError::new(self.base + data_at, DecodeErrorKind::ShapeDataMismatch);
        let count = element_count(&shape).ok_or_else(|| mismatch.clone())?;
        // Every element occupies at least one byte (strings at least four),
        // so a count beyond the remaining bytes can be rejected before any
        // allocation happens.
        let min_bytes = count.saturating_mul(dtype.element_size().unwrap_or(4) as u64);
        if min_bytes > self.remaining() as u64 {
            return Err(mismatch);
        }
        let count = count as usize;
        let data = match dtype {
            DType::F32 => TensorData::F32(self.fixed(count, f32::from_le_bytes)?),
            DType::F64 => TensorData::F64(self.fixed(count, f64::from_le_bytes)?),
            DType::I32 => TensorData::I32(self.fixed(count, i32::from_le_bytes)?),
            DType::I64 => TensorData::I64(self.fixed(count, i64::from_le_bytes)?),
            DType::U8 => TensorData::U8(self.take(count)?.to_vec()),
            DType::Bool => {
                let bytes = self.take(count)?;
                if let Some(i) = bytes.iter().position(|&b| b > 1) {
                    return Err(DecodeError::new(
                        self.base + data_at + i,
                        DecodeErrorKind::InvalidBool(bytes[i]),
                    ));
                }
                TensorData::Bool(bytes.iter().map(|&b| b == 1).collect())
            }
            DType::String => {
                let mut v = Vec::with_capacity(count);
                for _ in 0..count {
                    v.push(self.str()?);
                }
                TensorData::String(v)
            }
        };
        Tensor::new(shape, data).map_err(|_| mismatch)
    }

    fn count(&mut self) -> DResult<usize> {
        Ok(self.u32()? as usize)
    }

    fn settings(&mut self) -> DResult<Settings> {
        let n = self.count()?;
        let mut out = Settings::new();
        let mut last: Option<String> = None;
        for _ in 0..n {
            let at = self.pos;
            let key = self.str()?;
            if last.as_ref().is_some_and(|prev| *prev >= key) {
                return Err(DecodeError::new(self.base + at, DecodeErrorKind::UnsortedKeys));
            }
            let value = self.tensor()?;
            last = Some(key.clone());
            out.insert(key, value);
        }
        Ok(out)
    }

    fn uid_map(&mut self) -> DResult<BTreeMap<Uid, Tensor>> {
        let n = self.count()?;
        let mut out = BTreeMap::new();
        let mut last: Option<Uid> = None;
        for _ in 0..n {
            let at = self.pos;
            let uid = self.u32()?;
            if last.is_some_and(|prev| prev >= uid) {
                return Err(DecodeError::new(self.base + at, DecodeErrorKind::UnsortedKeys));
            }
            last = Some(uid);
            out.insert(uid, self.tensor()?);
        }
        Ok(out)
    }

    fn uid_list(&mut self) -> DResult<Vec<Uid>> {
        let n = self.count()?;
        if n.saturating_mul(4) > self.remaining() {
            return Err(self.err(DecodeErrorKind::TruncatedFrame));
        }
        (0..n).map(|_| self.u32()).collect()
    }

    fn specs(&mut self) -> DResult<SpecSet> {
        let mut specs = SpecSet::default();
        let mut seen = std::collections::BTreeSet::new();
        let n = self.count()?;
        for _ in 0..n {
            let at = self.pos;
            let uid = self.u32()?;
            if !seen.insert(uid) {
                return Err(DecodeError::new(self.base + at, DecodeErrorKind::DuplicateUid(uid)));
            }
            let name = self.str()?;
            let dtype = self.dtype()?;
            let shape = self.shape()?;
            let bounds_at = self.pos;
            let min = self.f64()?;
            let max = self.f64()?;
            let bounded = self.flag()?;
            if bounded && !(min <= max) {
                return Err(DecodeError::new(self.base + bounds_at, DecodeErrorKind::InvalidBounds));
            }
            specs.actuators.push(ActuatorSpec { uid, name, dtype, shape, min, max, bounded });
        }
        seen.clear();
        let n = self.count()?;
        for _ in 0..n {
            let at = self.pos;
            let uid = self.u32()?;
            if !seen.insert(uid) {
                return Err(DecodeError::new(self.base + at, DecodeErrorKind::DuplicateUid(uid)));
            }
            let name = self.str()?;
            let dtype = self.dtype()?;
            let shape = self.shape()?;
            specs.sensors.push(SensorSpec { uid, name, dtype, shape });
        }
        Ok(specs)
    }

    fn flag(&mut self) -> DResult<bool> {
        let at = self.pos;
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(DecodeError::new(self.base + at, DecodeErrorKind::InvalidBool(b))),
        }
    }

    fn body(&mut self, tag: u8, tag_at: usize) -> DResult<Body> {
        use kind::*;
        Ok(match tag {
            CREATE_WORLD_REQUEST => Body::CreateWorldRequest { settings: self.settings()? },
            CREATE_WORLD_RESPONSE => Body::CreateWorldResponse { world_name: self.str()? },
            JOIN_WORLD_REQUEST => Body::JoinWorldRequest {
                world_name: self.str()?,
                settings: self.settings()?,
            },
            JOIN_WORLD_RESPONSE => Body::JoinWorldResponse { specs: self.specs()? },
            STEP_REQUEST => Body::StepRequest {
                actions: self.uid_map()?,
                requested_observations: self.uid_list()?,
            },
            STEP_RESPONSE => {
                let at = self.pos;
                let raw = self.u8()?;
                let state = EpisodeStateTag::from_tag(raw).ok_or(DecodeError::new(
                    self.base + at,
                    DecodeErrorKind::UnknownEpisodeState(raw),
                ))?;
                Body::StepResponse { state, observations: self.uid_map()? }
            }
            RESET_REQUEST => Body::ResetRequest { settings: self.settings()? },
            RESET_RESPONSE => Body::ResetResponse { specs: self.specs()? },
            RESET_WORLD_REQUEST => Body::ResetWorldRequest,
            RESET_WORLD_RESPONSE => Body::ResetWorldResponse,
            LEAVE_WORLD_REQUEST => Body::LeaveWorldRequest,
            LEAVE_WORLD_RESPONSE => Body::LeaveWorldResponse,
            DESTROY_WORLD_REQUEST => Body::DestroyWorldRequest { world_name: self.str()? },
            DESTROY_WORLD_RESPONSE => Body::DestroyWorldResponse,
            ERROR_RESPONSE => Body::Error { code: self.u32()?, message: self.str()? },
            other => {
                return Err(DecodeError::new(
                    self.base + tag_at,
                    DecodeErrorKind::UnknownMessageKind(other),
                ))
            }
        })
    }
}

/// Decodes exactly one frame. `bytes` must hold the length prefix and the
/// full payload with nothing after it.
pub fn decode_message(bytes: &[u8]) -> Result<Message, DecodeError> {
    if bytes.len() < FRAME_PREFIX_LEN {
        return Err(DecodeError::new(0, DecodeErrorKind::TruncatedFrame));
    }
    let declared = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    if declared as usize > MAX_PAYLOAD_LEN {
        return Err(DecodeError::new(0, DecodeErrorKind::FrameTooLarge(declared)));
    }
    let declared = declared as usize;
    let actual = bytes.len() - FRAME_PREFIX_LEN;
    if actual < declared {
        return Err(DecodeError::new(bytes.len(), DecodeErrorKind::TruncatedFrame));
    }
    if actual > declared {
        return Err(DecodeError::new(0, DecodeErrorKind::FrameLengthMismatch { declared, actual }));
    }
    decode_payload_at(&bytes[FRAME_PREFIX_LEN..], FRAME_PREFIX_LEN)
}

/// Decodes a payload (frame without its length prefix).
pub fn decode_payload(payload: &[u8]) -> Result<Message, DecodeError> {
    decode_payload_at(payload, FRAME_PREFIX_LEN)
}

fn decode_payload_at(payload: &[u8], base: usize) -> Result<Message, DecodeError> {
    let mut r = Reader { buf: payload, pos: 0, base };
    let tag = r.u8()?;
    let sequence = r.u64()?;
    let body = r.body(tag, 0)?;
    if r.remaining() > 0 {
        return Err(r.err(DecodeErrorKind::TrailingBytes(r.remaining())));
    }
    Ok(Message { sequence, body })
}

/// Best-effort sequence number of a payload that failed to decode, so an
/// error response can still be paired with the offending request.
pub fn peek_sequence(payload: &[u8]) -> Option<u64> {
    let bytes = payload.get(1..PAYLOAD_HEADER_LEN)?;
    Some(u64::from_le_bytes(bytes.try_into().ok()?))
}

// ── stream framing ──────────────────────────────────────────────

/// Reads one payload from a byte stream. Returns `Ok(None)` on a clean end of
/// stream at a frame boundary.
pub fn read_frame<R: Read>(reader: &mut R, max_payload: usize) -> io::Result<Option<Vec<u8>>> {
    let mut prefix = [0u8; FRAME_PREFIX_LEN];
    let mut filled = 0;
    while filled < prefix.len() {
        match reader.read(&mut prefix[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    let len = u32::from_le_bytes(prefix) as usize;
    if len > max_payload.min(MAX_PAYLOAD_LEN) {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("frame of {len} bytes exceeds limit"),
        ));
    }
    let mut payload = vec![0u8; len];
    reader.read_exact(&mut payload)?;
    Ok(Some(payload))
}

pub fn write_message<W: Write>(writer: &mut W, msg: &Message) -> io::Result<()> {
    let frame = encode_message(msg).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    writer.write_all(&frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::message::ErrorCode;

    fn frame_for(tag: u8, seq: u64, body: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        v.extend_from_slice(&((PAYLOAD_HEADER_LEN + body.len()) as u32).to_le_bytes());
        v.push(tag);
        v.extend_from_slice(&seq.to_le_bytes());
        v.extend_from_slice(body);
        v
    }

    #[test]
    fn scalar_f32_tensor_bytes() {
        let mut w = Writer { buf: Vec::new() };
        w.tensor(&Tensor::scalar_f32(1.0));
        assert_eq!(w.buf, [0x01, 0x00, 0x00, 0x00, 0x80, 0x3F]);
    }

    #[test]
    fn pixel_tensor_data_length() {
        let t = Tensor::zeros(DType::U8, vec![72, 96, 3]).unwrap();
        let mut w = Writer { buf: Vec::new() };
        w.tensor(&t);
        // dtype + rank + 3 extents + data
        assert_eq!(w.buf.len() - 2 - 12, 20736);
    }

    #[test]
    fn frame_layout() {
        let msg = Message::new(0x0102, Body::ResetWorldRequest);
        let bytes = encode_message(&msg).unwrap();
        assert_eq!(bytes, frame_for(kind::RESET_WORLD_REQUEST, 0x0102, &[]));
    }

    #[test]
    fn string_tensor_is_length_prefixed() {
        let mut w = Writer { buf: Vec::new() };
        w.tensor(&Tensor::scalar_string("ab"));
        assert_eq!(w.buf, [7, 0, 2, 0, 0, 0, b'a', b'b']);
    }

    #[test]
    fn step_request_round_trip() {
        let mut actions = BTreeMap::new();
        actions.insert(1, Tensor::scalar_f32(0.5));
        actions.insert(4, Tensor::scalar_bool(true));
        let msg = Message::new(
            9,
            Body::StepRequest { actions, requested_observations: vec![1, 2, 3] },
        );
        let bytes = encode_message(&msg).unwrap();
        assert_eq!(decode_message(&bytes).unwrap(), msg);
    }

    #[test]
    fn unknown_tag_is_reported() {
        let err = decode_message(&frame_for(0xEE, 1, &[])).unwrap_err();
        assert_eq!(err.kind, DecodeErrorKind::UnknownMessageKind(0xEE));
        assert_eq!(err.offset, 4);
        assert!(err.to_string().contains("unknown message kind"));
    }

    #[test]
    fn empty_input_is_truncated() {
        let err = decode_message(&[]).unwrap_err();
        assert_eq!(err.kind, DecodeErrorKind::TruncatedFrame);
        assert_eq!(err.to_string(), "truncated frame at byte offset 0");
    }

    #[test]
    fn short_payload_is_truncated() {
        let mut f = frame_for(kind::CREATE_WORLD_RESPONSE, 1, &[5, 0, 0, 0, b'a']);
        let err = decode_message(&f).unwrap_err();
        assert_eq!(err.kind, DecodeErrorKind::TruncatedFrame);
        f.truncate(6);
        assert_eq!(decode_message(&f).unwrap_err().kind, DecodeErrorKind::TruncatedFrame);
    }

    #[test]
    fn invalid_utf8_reports_string_offset() {
        let f = frame_for(kind::CREATE_WORLD_RESPONSE, 1, &[2, 0, 0, 0, 0xC3, 0x28]);
        let err = decode_message(&f).unwrap_err();
        assert_eq!(err.kind, DecodeErrorKind::InvalidUtf8);
        assert_eq!(err.offset, 4 + 9 + 4);
    }

    #[test]
    fn huge_shape_is_rejected_without_allocation() {
        // StepResponse, state RUNNING, one observation of u8 [2^32-1, 2^32-1]
        let mut body = vec![0u8, 1, 0, 0, 0, 1, 0, 0, 0, 5, 2];
        body.extend_from_slice(&u32::MAX.to_le_bytes());
        body.extend_from_slice(&u32::MAX.to_le_bytes());
        let err = decode_message(&frame_for(kind::STEP_RESPONSE, 1, &body)).unwrap_err();
        assert_eq!(err.kind, DecodeErrorKind::ShapeDataMismatch);
    }

    #[test]
    fn unsorted_map_keys_rejected() {
        let mut body = vec![2, 0, 0, 0];
        for key in [b'b', b'a'] {
            body.extend_from_slice(&[1, 0, 0, 0, key, 3, 0, 0, 0, 0, 0]);
        }
        let err = decode_message(&frame_for(kind::CREATE_WORLD_REQUEST, 1, &body)).unwrap_err();
        assert_eq!(err.kind, DecodeErrorKind::UnsortedKeys);
    }

    #[test]
    fn bad_bool_rejected() {
        let body = vec![1, 0, 0, 0, 1, 0, 0, 0, 6, 0, 2, 0, 0, 0, 0];
        let err = decode_message(&frame_for(kind::STEP_REQUEST, 1, &body)).unwrap_err();
        assert_eq!(err.kind, DecodeErrorKind::InvalidBool(2));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let err = decode_message(&frame_for(kind::LEAVE_WORLD_REQUEST, 1, &[0])).unwrap_err();
        assert_eq!(err.kind, DecodeErrorKind::TrailingBytes(1));
        let mut f = encode_message(&Message::new(1, Body::LeaveWorldRequest)).unwrap();
        f.push(0);
        assert!(matches!(
            decode_message(&f).unwrap_err().kind,
            DecodeErrorKind::FrameLengthMismatch { .. }
        ));
    }

    #[test]
    fn error_response_round_trip() {
        let msg = Message::new(3, Body::error(ErrorCode::NotFound, "no world"));
        let bytes = encode_message(&msg).unwrap();
        assert_eq!(decode_message(&bytes).unwrap(), msg);
    }

    #[test]
    fn stream_framing() {
        let a = Message::new(1, Body::LeaveWorldRequest);
        let b = Message::new(2, Body::DestroyWorldRequest { world_name: "w".into() });
        let mut buf = Vec::new();
        write_message(&mut buf, &a).unwrap();
        write_message(&mut buf, &b).unwrap();
        let mut cursor = io::Cursor::new(buf);
        let p1 = read_frame(&mut cursor, 1 << 20).unwrap().unwrap();
        let p2 = read_frame(&mut cursor, 1 << 20).unwrap().unwrap();
        assert!(read_frame(&mut cursor, 1 << 20).unwrap().is_none());
        assert_eq!(decode_payload(&p1).unwrap(), a);
        assert_eq!(decode_payload(&p2).unwrap(), b);
        assert_eq!(peek_sequence(&p2), Some(2));
    }
}

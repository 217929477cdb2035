//! Length-prefixed binary frames exchanged between logical processes.
//!
//! Layout: `u32` big-endian length (bytes after the length field), one kind
//! byte, then a kind-specific body. All integers are big-endian.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::ids::{LpId, SeId, Timestep};

pub const PROTOCOL_VERSION: u16 = 1;
pub const MAX_PAYLOAD: usize = 1024;
/// Upper bound on the length field; anything larger is rejected before allocation.
pub const MAX_FRAME_LEN: u32 = 1 << 20;

pub const KIND_HELLO: u8 = 1;
pub const KIND_EVENT: u8 = 2;
pub const KIND_STEP_DONE: u8 = 3;
pub const KIND_MIGRATE_ANNOUNCE: u8 = 4;
pub const KIND_MIGRATE_DATA: u8 = 5;
pub const KIND_BYE: u8 = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("truncated frame: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("unknown frame kind 0x{0:02x}")]
    UnknownKind(u8),
    #[error("declared frame length {0} exceeds limit {MAX_FRAME_LEN}")]
    Oversize(u32),
    #[error("frame length field is zero")]
    Empty,
    #[error("body of kind {kind} too short")]
    ShortBody { kind: u8 },
    #[error("body of kind {kind} has {extra} trailing bytes")]
    TrailingBytes { kind: u8, extra: usize },
    #[error("event payload of {0} bytes exceeds {MAX_PAYLOAD}")]
    PayloadTooLarge(usize),
    #[error("migration announce from {0} to itself")]
    SelfMigration(LpId),
    #[error("migration state of {0} bytes does not fit in a frame")]
    StateTooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelloBody {
    pub protocol_version: u16,
    pub lp: LpId,
    pub num_lps: u32,
    pub global_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventBody {
    pub step: Timestep,
    pub sender: SeId,
    pub seq: u32,
    /// A concrete entity, or [`SeId::BROADCAST`].
    pub dest: SeId,
    pub payload: Vec<u8>,
}

impl EventBody {
    pub fn is_broadcast(&self) -> bool {
        self.dest == SeId::BROADCAST
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepDoneBody {
    pub step: Timestep,
    pub sent_count: u32,
    pub busy_nanos: u64,
    pub se_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MigrateAnnounceBody {
    pub step: Timestep,
    pub se: SeId,
    pub from: LpId,
    pub to: LpId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MigrateDataBody {
    pub step: Timestep,
    pub se: SeId,
    pub state: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    Hello(HelloBody),
    Event(EventBody),
    StepDone(StepDoneBody),
    MigrateAnnounce(MigrateAnnounceBody),
    MigrateData(MigrateDataBody),
    Bye { step: Timestep },
}

impl Frame {
    pub fn kind(&self) -> u8 {
        match self {
            Frame::Hello(_) => KIND_HELLO,
            Frame::Event(_) => KIND_EVENT,
            Frame::StepDone(_) => KIND_STEP_DONE,
            Frame::MigrateAnnounce(_) => KIND_MIGRATE_ANNOUNCE,
            Frame::MigrateData(_) => KIND_MIGRATE_DATA,
            Frame::Bye { .. } => KIND_BYE,
        }
    }

    fn body_len(&self) -> usize {
        match self {
            Frame::Hello(_) => 2 + 4 + 4 + 8,
            Frame::Event(e) => 8 + 8 + 4 + 8 + 2 + e.payload.len(),
            Frame::StepDone(_) => 8 + 4 + 8 + 4,
            Frame::MigrateAnnounce(_) => 8 + 8 + 4 + 4,
            Frame::MigrateData(d) => 8 + 8 + 4 + d.state.len(),
            Frame::Bye { .. } => 8,
        }
    }

    /// Total encoded size including the length prefix.
    pub fn encoded_len(&self) -> usize {
        4 + 1 + self.body_len()
    }

    fn validate(&self) -> Result<(), FrameError> {
        match self {
            Frame::Event(e) if e.payload.len() > MAX_PAYLOAD => {
                Err(FrameError::PayloadTooLarge(e.payload.len()))
            }
            Frame::MigrateAnnounce(a) if a.from == a.to => Err(FrameError::SelfMigration(a.from)),
            Frame::MigrateData(d) if self.body_len() + 1 > MAX_FRAME_LEN as usize => {
                Err(FrameError::StateTooLarge(d.state.len()))
            }
            _ => Ok(()),
        }
    }
}

/// Encodes one frame, appending to `out`.
pub fn encode_frame_into(frame: &Frame, out: &mut Vec<u8>) -> Result<(), FrameError> {
    frame.validate()?;
    out.reserve(frame.encoded_len());
    out.extend_from_slice(&((frame.body_len() + 1) as u32).to_be_bytes());
    out.push(frame.kind());
    match frame {
        Frame::Hello(h) => {
            out.extend_from_slice(&h.protocol_version.to_be_bytes());
            out.extend_from_slice(&h.lp.0.to_be_bytes());
            out.extend_from_slice(&h.num_lps.to_be_bytes());
            out.extend_from_slice(&h.global_seed.to_be_bytes());
        }
        Frame::Event(e) => {
            out.extend_from_slice(&e.step.0.to_be_bytes());
            out.extend_from_slice(&e.sender.0.to_be_bytes());
            out.extend_from_slice(&e.seq.to_be_bytes());
            out.extend_from_slice(&e.dest.0.to_be_bytes());
            out.extend_from_slice(&(e.payload.len() as u16).to_be_bytes());
            out.extend_from_slice(&e.payload);
        }
        Frame::StepDone(s) => {
            out.extend_from_slice(&s.step.0.to_be_bytes());
            out.extend_from_slice(&s.sent_count.to_be_bytes());
            out.extend_from_slice(&s.busy_nanos.to_be_bytes());
            out.extend_from_slice(&s.se_count.to_be_bytes());
        }
        Frame::MigrateAnnounce(a) => {
            out.extend_from_slice(&a.step.0.to_be_bytes());
            out.extend_from_slice(&a.se.0.to_be_bytes());
            out.extend_from_slice(&a.from.0.to_be_bytes());
            out.extend_from_slice(&a.to.0.to_be_bytes());
        }
        Frame::MigrateData(d) => {
            out.extend_from_slice(&d.step.0.to_be_bytes());
            out.extend_from_slice(&d.se.0.to_be_bytes());
            out.extend_from_slice(&(d.state.len() as u32).to_be_bytes());
            out.extend_from_slice(&d.state);
        }
        Frame::Bye { step } => out.extend_from_slice(&step.0.to_be_bytes()),
    }
    Ok(())
}

pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>, FrameError> {
    let mut out = Vec::with_capacity(frame.encoded_len());
    encode_frame_into(frame, &mut out)?;
    Ok(out)
}

/// Decodes exactly one frame occupying all of `bytes`.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame, FrameError> {
    let (frame, used) = decode_prefix(bytes)?;
    if used != bytes.len() {
        return Err(FrameError::TrailingBytes {
            kind: frame.kind(),
            extra: bytes.len() - used,
        });
    }
    Ok(frame)
}

/// Decodes the first frame in `bytes`, returning it with the number of bytes consumed.
pub fn decode_prefix(bytes: &[u8]) -> Result<(Frame, usize), FrameError> {
    if bytes.len() < 4 {
        return Err(FrameError::Truncated { needed: 4, available: bytes.len() });
    }
    let len = u32::from_be_bytes(bytes[..4].try_into().unwrap());
    check_len(len)?;
    let total = 4 + len as usize;
    if bytes.len() < total {
        return Err(FrameError::Truncated { needed: total, available: bytes.len() });
    }
    let frame = decode_body(bytes[4], &bytes[5..total])?;
    Ok((frame, total))
}

fn check_len(len: u32) -> Result<(), FrameError> {
    if len == 0 {
        Err(FrameError::Empty)
    } else if len > MAX_FRAME_LEN {
        Err(FrameError::Oversize(len))
    } else {
        Ok(())
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    kind: u8,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FrameError> {
        if self.buf.len() < n {
            return Err(FrameError::ShortBody { kind: self.kind });
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }
    fn u16(&mut self) -> Result<u16, FrameError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, FrameError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, FrameError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn finish(self) -> Result<(), FrameError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(FrameError::TrailingBytes { kind: self.kind, extra: self.buf.len() })
        }
    }
}

fn decode_body(kind: u8, body: &[u8]) -> Result<Frame, FrameError> {
    let mut c = Cursor { buf: body, kind };
    let frame = match kind {
        KIND_HELLO => Frame::Hello(HelloBody {
            protocol_version: c.u16()?,
            lp: LpId(c.u32()?),
            num_lps: c.u32()?,
            global_seed: c.u64()?,
        }),
        KIND_EVENT => {
            let step = Timestep(c.u64()?);
            let sender = SeId(c.u64()?);
            let seq = c.u32()?;
            let dest = SeId(c.u64()?);
            let len = c.u16()? as usize;
            if len > MAX_PAYLOAD {
                return Err(FrameError::PayloadTooLarge(len));
            }
            let payload = c.take(len)?.to_vec();
            Frame::Event(EventBody { step, sender, seq, dest, payload })
        }
        KIND_STEP_DONE => Frame::StepDone(StepDoneBody {
            step: Timestep(c.u64()?),
            sent_count: c.u32()?,
            busy_nanos: c.u64()?,
            se_count: c.u32()?,
        }),
        KIND_MIGRATE_ANNOUNCE => {
            let a = MigrateAnnounceBody {
                step: Timestep(c.u64()?),
                se: SeId(c.u64()?),
                from: LpId(c.u32()?),
                to: LpId(c.u32()?),
            };
            if a.from == a.to {
                return Err(FrameError::SelfMigration(a.from));
            }
            Frame::MigrateAnnounce(a)
        }
        KIND_MIGRATE_DATA => {
            let step = Timestep(c.u64()?);
            let se = SeId(c.u64()?);
            let len = c.u32()? as usize;
            let state = c.take(len)?.to_vec();
            Frame::MigrateData(MigrateDataBody { step, se, state })
        }
        KIND_BYE => Frame::Bye { step: Timestep(c.u64()?) },
        other => return Err(FrameError::UnknownKind(other)),
    };
    c.finish()?;
    Ok(frame)
}

/// Errors from stream-oriented frame I/O.
#[derive(Debug, Error)]
pub enum FrameIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Reads one frame from a byte stream. Returns `Ok(None)` on clean EOF at a frame boundary.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<Frame>, FrameIoError> {
    let mut len_buf = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        match r.read(&mut len_buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(io::Error::from(io::ErrorKind::UnexpectedEof).into()),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(len_buf);
    check_len(len)?;
    let mut rest = vec![0u8; len as usize];
    r.read_exact(&mut rest)?;
    Ok(Some(decode_body(rest[0], &rest[1..])?))
}

pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> Result<(), FrameIoError> {
    let bytes = encode_frame(frame)?;
    w.write_all(&bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bye_golden_bytes() {
        let bytes = encode_frame(&Frame::Bye { step: Timestep(0) }).unwrap();
        assert_eq!(bytes, [0, 0, 0, 9, 6, 0, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn empty_event_round_trips() {
        let f = Frame::Event(EventBody {
            step: Timestep(3),
            sender: SeId(1),
            seq: 0,
            dest: SeId::BROADCAST,
            payload: vec![],
        });
        assert_eq!(decode_frame(&encode_frame(&f).unwrap()).unwrap(), f);
    }

    #[test]
    fn truncated_input_errors() {
        let bytes = encode_frame(&Frame::Bye { step: Timestep(5) }).unwrap();
        for cut in 0..bytes.len() {
            assert!(matches!(decode_frame(&bytes[..cut]), Err(FrameError::Truncated { .. })));
        }
    }

    #[test]
    fn unknown_kind_rejected() {
        assert_eq!(decode_frame(&[0, 0, 0, 1, 0x7F]), Err(FrameError::UnknownKind(0x7F)));
    }

    #[test]
    fn oversize_rejected_without_allocation() {
        let bytes = [0x80, 0, 0, 0, 2];
        assert_eq!(decode_frame(&bytes), Err(FrameError::Oversize(1 << 31)));
        let mut r: &[u8] = &bytes;
        assert!(matches!(read_frame(&mut r), Err(FrameIoError::Frame(FrameError::Oversize(_)))));
    }

    #[test]
    fn short_body_and_trailing_bytes() {
        // STEP_DONE with a 2-byte body
        assert_eq!(
            decode_frame(&[0, 0, 0, 3, 3, 0, 0]),
            Err(FrameError::ShortBody { kind: 3 })
        );
        // BYE with one extra byte inside the declared length
        assert_eq!(
            decode_frame(&[0, 0, 0, 10, 6, 0, 0, 0, 0, 0, 0, 0, 0, 9]),
            Err(FrameError::TrailingBytes { kind: 6, extra: 1 })
        );
    }

    #[test]
    fn encode_rejects_invalid_bodies() {
        let big = Frame::Event(EventBody {
            step: Timestep(0),
            sender: SeId(0),
            seq: 0,
            dest: SeId(1),
            payload: vec![0; MAX_PAYLOAD + 1],
        });
        assert_eq!(encode_frame(&big), Err(FrameError::PayloadTooLarge(MAX_PAYLOAD + 1)));
        let selfmig = Frame::MigrateAnnounce(MigrateAnnounceBody {
            step: Timestep(0),
            se: SeId(0),
            from: LpId(1),
            to: LpId(1),
        });
        assert_eq!(encode_frame(&selfmig), Err(FrameError::SelfMigration(LpId(1))));
    }

    #[test]
    fn stream_reading_concatenated_frames() {
        let mut buf = Vec::new();
        let a = Frame::Bye { step: Timestep(1) };
        let b = Frame::StepDone(StepDoneBody {
            step: Timestep(2),
            sent_count: 5,
            busy_nanos: 99,
            se_count: 4000,
        });
        write_frame(&mut buf, &a).unwrap();
        write_frame(&mut buf, &b).unwrap();
        let mut r: &[u8] = &buf;
        assert_eq!(read_frame(&mut r).unwrap(), Some(a));
        assert_eq!(read_frame(&mut r).unwrap(), Some(b));
        assert_eq!(read_frame(&mut r).unwrap(), None);
    }
}

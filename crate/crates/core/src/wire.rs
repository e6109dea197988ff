//! Bit-exact byte layouts for the data channel and the control channel.
//!
//! All multi-byte integers are big-endian; floats are IEEE-754 binary64 bit
//! patterns in big-endian order. The full layout tables live in
//! `docs/PROTOCOL.md`.

use thiserror::Error;

use crate::lt::CodingParams;

/// Application-layer datagram budget.
pub const MAX_DATAGRAM: usize = 1450;
pub const DATA_HEADER_LEN: usize = 25;
pub const MAX_SYMBOL_SIZE: usize = MAX_DATAGRAM - DATA_HEADER_LEN;
pub const DATA_MAGIC: [u8; 4] = *b"LTCP";
pub const ACK_MAGIC: [u8; 4] = *b"LTAK";
pub const ACK_LEN: usize = 13;

/// Seed drives SplitMix64 neighbor selection (see `lt::neighbors_from_seed`).
pub const VERSION_LT_SPLITMIX: u8 = 1;
/// Seed field carries a raw chunk index; payload is the uncoded chunk.
pub const VERSION_UNCODED: u8 = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("datagram of {0} bytes exceeds the {MAX_DATAGRAM}-byte budget")]
    MtuExceeded(usize),
    #[error("malformed packet: {0}")]
    MalformedPacket(String),
    #[error("malformed control message: {0}")]
    MalformedMessage(String),
}

/// One data-channel datagram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPacket {
    pub version: u8,
    pub block_id: u32,
    pub block_count: u32,
    pub n: u16,
    pub seed: u64,
    pub payload: Vec<u8>,
}

impl DataPacket {
    pub fn symbol_size(&self) -> usize {
        self.payload.len()
    }

    pub fn encoded_len(&self) -> usize {
        DATA_HEADER_LEN + self.payload.len()
    }
}

pub fn encode_data_packet(p: &DataPacket) -> Result<Vec<u8>, WireError> {
    if p.payload.len() > MAX_SYMBOL_SIZE {
        return Err(WireError::MtuExceeded(p.encoded_len()));
    }
    let mut out = Vec::with_capacity(p.encoded_len());
    out.extend_from_slice(&DATA_MAGIC);
    out.push(p.version);
    out.extend_from_slice(&p.block_id.to_be_bytes());
    out.extend_from_slice(&p.block_count.to_be_bytes());
    out.extend_from_slice(&p.n.to_be_bytes());
    out.extend_from_slice(&(p.payload.len() as u16).to_be_bytes());
    out.extend_from_slice(&p.seed.to_be_bytes());
    out.extend_from_slice(&p.payload);
    Ok(out)
}

pub fn decode_data_packet(b: &[u8]) -> Result<DataPacket, WireError> {
    let bad = |m: &str| WireError::MalformedPacket(m.to_string());
    if b.len() < DATA_HEADER_LEN {
        return Err(bad("shorter than header"));
    }
    if b.len() > MAX_DATAGRAM {
        return Err(WireError::MtuExceeded(b.len()));
    }
    if b[0..4] != DATA_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = b[4];
    if version != VERSION_LT_SPLITMIX && version != VERSION_UNCODED {
        return Err(bad("unknown version"));
    }
    let mut r = Reader::new(&b[5..]);
    let block_id = r.u32().ok_or_else(|| bad("truncated"))?;
    let block_count = r.u32().ok_or_else(|| bad("truncated"))?;
    let n = r.u16().ok_or_else(|| bad("truncated"))?;
    let symbol_size = r.u16().ok_or_else(|| bad("truncated"))? as usize;
    let seed = r.u64().ok_or_else(|| bad("truncated"))?;
    if symbol_size == 0 || b.len() != DATA_HEADER_LEN + symbol_size {
        return Err(bad("length does not match symbol size"));
    }
    if n == 0 {
        return Err(bad("zero block size"));
    }
    if block_id >= block_count {
        return Err(bad("block id beyond block count"));
    }
    Ok(DataPacket { version, block_id, block_count, n, seed, payload: b[DATA_HEADER_LEN..].to_vec() })
}

/// Acknowledgement for one uncoded chunk (ARQ baseline only).
pub fn encode_ack(chunk: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(ACK_LEN);
    out.extend_from_slice(&ACK_MAGIC);
    out.push(VERSION_UNCODED);
    out.extend_from_slice(&chunk.to_be_bytes());
    out
}

pub fn decode_ack(b: &[u8]) -> Result<u64, WireError> {
    if b.len() != ACK_LEN || b[0..4] != ACK_MAGIC || b[4] != VERSION_UNCODED {
        return Err(WireError::MalformedPacket("bad ack".into()));
    }
    Ok(u64::from_be_bytes(b[5..13].try_into().unwrap()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Assistant,
    Requester,
}

/// Control-channel messages of the register / request / group / ready /
/// terminate workflow, plus per-block completion acks.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlMessage {
    Register { client_id: u32, lat: f64, lon: f64, battery: u8 },
    HelpRequest { client_id: u32, file_id: u32 },
    GroupAssign { ssid: String, role: Role, coding: CodingParams, peers: Vec<u32> },
    Ready { client_id: u32 },
    Terminate { client_id: u32, file_id: u32 },
    BlockAck { client_id: u32, block_id: u32 },
}

const TAG_REGISTER: u8 = 0x01;
const TAG_HELP: u8 = 0x02;
const TAG_GROUP: u8 = 0x03;
const TAG_READY: u8 = 0x04;
const TAG_TERMINATE: u8 = 0x05;
const TAG_BLOCK_ACK: u8 = 0x06;

/// Frames `msg` as `len:u16 | tag:u8 | body`, where `len` counts tag and body.
pub fn encode_ctrl(msg: &ControlMessage) -> Result<Vec<u8>, WireError> {
    let bad = |m: String| WireError::MalformedMessage(m);
    let mut body = Vec::new();
    let tag = match msg {
        ControlMessage::Register { client_id, lat, lon, battery } => {
            if !valid_location(*lat, *lon) {
                return Err(bad(format!("location ({lat}, {lon}) out of range")));
            }
            if *battery > 100 {
                return Err(bad(format!("battery {battery}% above 100")));
            }
            body.extend_from_slice(&client_id.to_be_bytes());
            body.extend_from_slice(&lat.to_bits().to_be_bytes());
            body.extend_from_slice(&lon.to_bits().to_be_bytes());
            body.push(*battery);
            TAG_REGISTER
        }
        ControlMessage::HelpRequest { client_id, file_id } => {
            body.extend_from_slice(&client_id.to_be_bytes());
            body.extend_from_slice(&file_id.to_be_bytes());
            TAG_HELP
        }
        ControlMessage::GroupAssign { ssid, role, coding, peers } => {
            let ssid_len = u8::try_from(ssid.len()).map_err(|_| bad("ssid longer than 255 bytes".into()))?;
            let n = u16::try_from(coding.n).map_err(|_| bad("n does not fit in 16 bits".into()))?;
            let size = u16::try_from(coding.symbol_size)
                .map_err(|_| bad("symbol size does not fit in 16 bits".into()))?;
            let peer_count = u16::try_from(peers.len()).map_err(|_| bad("too many peers".into()))?;
            if !(coding.c.is_finite() && coding.delta.is_finite()) {
                return Err(bad("non-finite coding constants".into()));
            }
            body.push(ssid_len);
            body.extend_from_slice(ssid.as_bytes());
            body.push(match role {
                Role::Assistant => 0,
                Role::Requester => 1,
            });
            body.extend_from_slice(&n.to_be_bytes());
            body.extend_from_slice(&size.to_be_bytes());
            body.extend_from_slice(&coding.c.to_bits().to_be_bytes());
            body.extend_from_slice(&coding.delta.to_bits().to_be_bytes());
            body.extend_from_slice(&peer_count.to_be_bytes());
            for p in peers {
                body.extend_from_slice(&p.to_be_bytes());
            }
            TAG_GROUP
        }
        ControlMessage::Ready { client_id } => {
            body.extend_from_slice(&client_id.to_be_bytes());
            TAG_READY
        }
        ControlMessage::Terminate { client_id, file_id } => {
            body.extend_from_slice(&client_id.to_be_bytes());
            body.extend_from_slice(&file_id.to_be_bytes());
            TAG_TERMINATE
        }
        ControlMessage::BlockAck { client_id, block_id } => {
            body.extend_from_slice(&client_id.to_be_bytes());
            body.extend_from_slice(&block_id.to_be_bytes());
            TAG_BLOCK_ACK
        }
    };
    let len = u16::try_from(body.len() + 1).map_err(|_| bad("message longer than 65535 bytes".into()))?;
    let mut out = Vec::with_capacity(body.len() + 3);
    out.extend_from_slice(&len.to_be_bytes());
    out.push(tag);
    out.extend_from_slice(&body);
    Ok(out)
}

/// Decodes the first frame in `b`, returning the message and bytes consumed.
pub fn decode_ctrl(b: &[u8]) -> Result<(ControlMessage, usize), WireError> {
    let bad = |m: &str| WireError::MalformedMessage(m.to_string());
    if b.len() < 3 {
        return Err(bad("shorter than frame header"));
    }
    let len = u16::from_be_bytes([b[0], b[1]]) as usize;
    if len == 0 || b.len() < 2 + len {
        return Err(bad("truncated frame"));
    }
    let tag = b[2];
    let mut r = Reader::new(&b[3..2 + len]);
    let trunc = || bad("truncated body");
    let msg = match tag {
        TAG_REGISTER => {
            let client_id = r.u32().ok_or_else(trunc)?;
            let lat = f64::from_bits(r.u64().ok_or_else(trunc)?);
            let lon = f64::from_bits(r.u64().ok_or_else(trunc)?);
            let battery = r.u8().ok_or_else(trunc)?;
            if !valid_location(lat, lon) {
                return Err(bad("location out of range"));
            }
            if battery > 100 {
                return Err(bad("battery above 100%"));
            }
            ControlMessage::Register { client_id, lat, lon, battery }
        }
        TAG_HELP => ControlMessage::HelpRequest {
            client_id: r.u32().ok_or_else(trunc)?,
            file_id: r.u32().ok_or_else(trunc)?,
        },
        TAG_GROUP => {
            let ssid_len = r.u8().ok_or_else(trunc)? as usize;
            let ssid = r.bytes(ssid_len).ok_or_else(trunc)?;
            let ssid = String::from_utf8(ssid.to_vec()).map_err(|_| bad("ssid is not utf-8"))?;
            let role = match r.u8().ok_or_else(trunc)? {
                0 => Role::Assistant,
                1 => Role::Requester,
                _ => return Err(bad("unknown role")),
            };
            let n = r.u16().ok_or_else(trunc)? as usize;
            let symbol_size = r.u16().ok_or_else(trunc)? as usize;
            let c = f64::from_bits(r.u64().ok_or_else(trunc)?);
            let delta = f64::from_bits(r.u64().ok_or_else(trunc)?);
            if !(c.is_finite() && delta.is_finite()) {
                return Err(bad("non-finite coding constants"));
            }
            let count = r.u16().ok_or_else(trunc)? as usize;
            let peers = (0..count).map(|_| r.u32().ok_or_else(trunc)).collect::<Result<_, _>>()?;
            ControlMessage::GroupAssign { ssid, role, coding: CodingParams { n, symbol_size, c, delta }, peers }
        }
        TAG_READY => ControlMessage::Ready { client_id: r.u32().ok_or_else(trunc)? },
        TAG_TERMINATE => ControlMessage::Terminate {
            client_id: r.u32().ok_or_else(trunc)?,
            file_id: r.u32().ok_or_else(trunc)?,
        },
        TAG_BLOCK_ACK => ControlMessage::BlockAck {
            client_id: r.u32().ok_or_else(trunc)?,
            block_id: r.u32().ok_or_else(trunc)?,
        },
        other => return Err(WireError::MalformedMessage(format!("unknown tag {other:#04x}"))),
    };
    if !r.is_empty() {
        return Err(bad("trailing bytes in frame"));
    }
    Ok((msg, 2 + len))
}

/// Splits a byte stream into complete messages; returns any unconsumed tail length.
pub fn decode_ctrl_stream(mut b: &[u8]) -> Result<(Vec<ControlMessage>, usize), WireError> {
    let mut out = Vec::new();
    while b.len() >= 2 {
        let len = u16::from_be_bytes([b[0], b[1]]) as usize;
        if b.len() < 2 + len {
            break;
        }
        let (msg, used) = decode_ctrl(b)?;
        out.push(msg);
        b = &b[used..];
    }
    Ok((out, b.len()))
}

fn valid_location(lat: f64, lon: f64) -> bool {
    (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon)
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    fn bytes(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.buf.len() < n {
            return None;
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Some(head)
    }

    fn u8(&mut self) -> Option<u8> {
        self.bytes(1).map(|b| b[0])
    }

    fn u16(&mut self) -> Option<u16> {
        self.bytes(2).map(|b| u16::from_be_bytes(b.try_into().unwrap()))
    }

    fn u32(&mut self) -> Option<u32> {
        self.bytes(4).map(|b| u32::from_be_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.bytes(8).map(|b| u64::from_be_bytes(b.try_into().unwrap()))
    }

    fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }
}

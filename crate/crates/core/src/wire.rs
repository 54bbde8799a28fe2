//! Packet layouts and the Internet checksum.
//!
//! Every packet starts with the same four octets:
//!
//! ```text
//!  0        1        2                 4
//! +--------+--------+--------+--------+
//! |  type  |  code  |    checksum     |
//! +--------+--------+--------+--------+
//! ```
//!
//! followed by a type-specific payload. Multi-octet integers are big-endian.
//! The checksum is the ones'-complement of the ones'-complement sum of the
//! whole packet, computed with the checksum field zeroed. Variable-length
//! lists are prefixed with a 16-bit element count. See `docs/wire-format.md`
//! for the full octet map.

use alloc::vec::Vec;

use crate::types::{NodeId, Rank};

pub const TYPE_DIO: u8 = 0x01;
pub const TYPE_REQP_R: u8 = 0x02;
pub const TYPE_ACK: u8 = 0x03;
pub const TYPE_RPL_MC: u8 = 0x04;
pub const TYPE_WARNING: u8 = 0x05;
pub const TYPE_DATA: u8 = 0x06;

pub const HEADER_LEN: usize = 4;

/// Reliability and veracity travel as ten-thousandths.
pub const FIXED_POINT_ONE: u16 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("field `{0}` does not fit its wire width")]
    FieldOverflow(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("packet truncated")]
    Truncated,
    #[error("checksum mismatch")]
    BadChecksum,
    #[error("unknown packet type {0:#04x}")]
    UnknownType(u8),
    #[error("unknown code {code} for packet type {ty:#04x}")]
    UnknownCode { ty: u8, code: u8 },
    #[error("{0} trailing bytes after packet")]
    TrailingBytes(usize),
    #[error("field `{0}` holds an out-of-range value")]
    BadField(&'static str),
}

impl DecodeError {
    /// Integrity failures (the bytes were damaged) as opposed to format errors.
    pub fn is_integrity(&self) -> bool {
        matches!(self, DecodeError::BadChecksum)
    }
}

/// DODAG information object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dio {
    pub sender: NodeId,
    pub rank: Rank,
    /// Sender's own reliability in ten-thousandths.
    pub reliability: u16,
    /// Repair epoch; bumped by the root on every quarantine.
    pub version: u16,
    /// Sender has a confirmed path to the root at `version`.
    pub grounded: bool,
}

/// Reliability probe flooded from the border router.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReqpR {
    /// Last node that inserted its information.
    pub node: NodeId,
    /// That node's residual energy, milli-units.
    pub energy: u32,
    pub source: [u8; 16],
    pub sequence: u32,
    /// Accumulated route, border router first.
    pub route: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckKind {
    /// Answer to a REQP_R; carries the monitoring table.
    Reliability = 0,
    /// Answer to an RPL-MC probe.
    Probe = 1,
}

/// One monitoring-table row as claimed by its owner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableClaim {
    pub neighbor: NodeId,
    pub trust: u32,
    pub energy: u32,
    /// Ten-thousandths.
    pub veracity: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ack {
    pub kind: AckKind,
    pub node: NodeId,
    pub sequence: u32,
    /// Hops still to travel, border router last.
    pub return_route: Vec<NodeId>,
    pub table: Vec<TableClaim>,
}

/// Root-issued route probe. `base` is the destination address.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RplMc {
    pub base: [u8; 16],
    pub options: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarningKind {
    /// Root to everyone: the node is quarantined.
    Quarantine = 0,
    /// Node to root: a DIO from `malicious` failed the rank rule.
    Suspicion = 1,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub kind: WarningKind,
    pub malicious: NodeId,
    pub malicious_rank: Rank,
    /// Microseconds of simulation time.
    pub issue_time: u64,
    pub origin: NodeId,
    pub version: u16,
}

/// Reference to one original sensor reading inside a (possibly aggregated) payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct DataTag {
    pub source: NodeId,
    pub sequence: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Data {
    pub hops: u8,
    pub contributors: Vec<DataTag>,
    pub key_id: u32,
    /// Big-endian ciphertext.
    pub ciphertext: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Packet {
    Dio(Dio),
    ReqpR(ReqpR),
    Ack(Ack),
    RplMc(RplMc),
    Warning(Warning),
    Data(Data),
}

impl Packet {
    pub fn type_byte(&self) -> u8 {
        match self {
            Packet::Dio(_) => TYPE_DIO,
            Packet::ReqpR(_) => TYPE_REQP_R,
            Packet::Ack(_) => TYPE_ACK,
            Packet::RplMc(_) => TYPE_RPL_MC,
            Packet::Warning(_) => TYPE_WARNING,
            Packet::Data(_) => TYPE_DATA,
        }
    }

    pub fn code_byte(&self) -> u8 {
        match self {
            Packet::Ack(a) => a.kind as u8,
            Packet::Warning(w) => w.kind as u8,
            _ => 0,
        }
    }

    /// Short lowercase name used in traces and counters.
    pub fn kind_name(&self) -> &'static str {
        kind_name(self.type_byte())
    }
}

pub fn kind_name(ty: u8) -> &'static str {
    match ty {
        TYPE_DIO => "dio",
        TYPE_REQP_R => "reqp_r",
        TYPE_ACK => "ack",
        TYPE_RPL_MC => "rpl_mc",
        TYPE_WARNING => "warning",
        TYPE_DATA => "data",
        _ => "unknown",
    }
}

/// Ones'-complement sum of 16-bit big-endian words, odd trailing byte zero-padded,
/// folded to 16 bits.
pub fn ones_complement_sum(data: &[u8]) -> u16 {
    let mut sum: u64 = 0;
    let mut chunks = data.chunks_exact(2);
    for w in &mut chunks {
        sum += u64::from(u16::from_be_bytes([w[0], w[1]]));
    }
    if let [last] = chunks.remainder() {
        sum += u64::from(*last) << 8;
    }
    while sum > 0xffff {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    sum as u16
}

/// The Internet checksum of `data`.
pub fn internet_checksum(data: &[u8]) -> u16 {
    !ones_complement_sum(data)
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }
    fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }
    fn count(&mut self, len: usize, field: &'static str) -> Result<(), EncodeError> {
        let n = u16::try_from(len).map_err(|_| EncodeError::FieldOverflow(field))?;
        self.u16(n);
        Ok(())
    }
}

fn fixed_point(v: u16, field: &'static str) -> Result<u16, EncodeError> {
    if v > FIXED_POINT_ONE {
        Err(EncodeError::FieldOverflow(field))
    } else {
        Ok(v)
    }
}

/// Serializes a packet, filling in the checksum.
pub fn encode_packet(p: &Packet) -> Result<Vec<u8>, EncodeError> {
    let mut w = Writer {
        buf: Vec::with_capacity(64),
    };
    w.u8(p.type_byte());
    w.u8(p.code_byte());
    w.u16(0);
    match p {
        Packet::Dio(d) => {
            w.u32(d.sender.0);
            w.u16(d.rank.0);
            w.u16(fixed_point(d.reliability, "reliability")?);
            w.u16(d.version);
            w.u8(u8::from(d.grounded));
        }
        Packet::ReqpR(r) => {
            w.u32(r.node.0);
            w.u32(r.energy);
            w.bytes(&r.source);
            w.u32(r.sequence);
            w.count(r.route.len(), "route")?;
            for n in &r.route {
                w.u32(n.0);
            }
        }
        Packet::Ack(a) => {
            w.u32(a.node.0);
            w.u32(a.sequence);
            w.count(a.return_route.len(), "return_route")?;
            for n in &a.return_route {
                w.u32(n.0);
            }
            w.count(a.table.len(), "table")?;
            for c in &a.table {
                w.u32(c.neighbor.0);
                w.u32(c.trust);
                w.u32(c.energy);
                w.u16(fixed_point(c.veracity, "veracity")?);
            }
        }
        Packet::RplMc(m) => {
            w.bytes(&m.base);
            w.count(m.options.len(), "options")?;
            w.bytes(&m.options);
        }
        Packet::Warning(x) => {
            w.u32(x.malicious.0);
            w.u16(x.malicious_rank.0);
            w.u64(x.issue_time);
            w.u32(x.origin.0);
            w.u16(x.version);
        }
        Packet::Data(d) => {
            w.u8(d.hops);
            w.count(d.contributors.len(), "contributors")?;
            for t in &d.contributors {
                w.u32(t.source.0);
                w.u32(t.sequence);
            }
            w.u32(d.key_id);
            w.count(d.ciphertext.len(), "ciphertext")?;
            w.bytes(&d.ciphertext);
        }
    }
    let sum = internet_checksum(&w.buf);
    w.buf[2..4].copy_from_slice(&sum.to_be_bytes());
    Ok(w.buf)
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.buf.len() < n {
            return Err(DecodeError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }
    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, DecodeError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }
    fn u32(&mut self) -> Result<u32, DecodeError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
    fn u64(&mut self) -> Result<u64, DecodeError> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(u64::from_be_bytes(a))
    }
    fn addr(&mut self) -> Result<[u8; 16], DecodeError> {
        let mut a = [0u8; 16];
        a.copy_from_slice(self.take(16)?);
        Ok(a)
    }
    fn node(&mut self) -> Result<NodeId, DecodeError> {
        self.u32().map(NodeId)
    }
    fn nodes(&mut self) -> Result<Vec<NodeId>, DecodeError> {
        let n = usize::from(self.u16()?);
        // Every id takes four octets; refuse counts the buffer cannot hold
        // before allocating.
        if self.buf.len() < n * 4 {
            return Err(DecodeError::Truncated);
        }
        (0..n).map(|_| self.node()).collect()
    }
    fn fixed_point(&mut self, field: &'static str) -> Result<u16, DecodeError> {
        let v = self.u16()?;
        if v > FIXED_POINT_ONE {
            return Err(DecodeError::BadField(field));
        }
        Ok(v)
    }
}

/// Parses and verifies a packet.
pub fn decode_packet(bytes: &[u8]) -> Result<Packet, DecodeError> {
    if bytes.len() < HEADER_LEN {
        return Err(DecodeError::Truncated);
    }
    if ones_complement_sum(bytes) != 0xffff {
        return Err(DecodeError::BadChecksum);
    }
    let ty = bytes[0];
    let code = bytes[1];
    let mut r = Reader {
        buf: &bytes[HEADER_LEN..],
    };
    let bad_code = DecodeError::UnknownCode { ty, code };
    let packet = match ty {
        TYPE_DIO => {
            if code != 0 {
                return Err(bad_code);
            }
            let sender = r.node()?;
            let rank = Rank(r.u16()?);
            let reliability = r.fixed_point("reliability")?;
            let version = r.u16()?;
            let grounded = match r.u8()? {
                0 => false,
                1 => true,
                _ => return Err(DecodeError::BadField("grounded")),
            };
            Packet::Dio(Dio {
                sender,
                rank,
                reliability,
                version,
                grounded,
            })
        }
        TYPE_REQP_R => {
            if code != 0 {
                return Err(bad_code);
            }
            Packet::ReqpR(ReqpR {
                node: r.node()?,
                energy: r.u32()?,
                source: r.addr()?,
                sequence: r.u32()?,
                route: r.nodes()?,
            })
        }
        TYPE_ACK => {
            let kind = match code {
                0 => AckKind::Reliability,
                1 => AckKind::Probe,
                _ => return Err(bad_code),
            };
            let node = r.node()?;
            let sequence = r.u32()?;
            let return_route = r.nodes()?;
            let n = usize::from(r.u16()?);
            if r.buf.len() < n * 14 {
                return Err(DecodeError::Truncated);
            }
            let mut table = Vec::with_capacity(n);
            for _ in 0..n {
                table.push(TableClaim {
                    neighbor: r.node()?,
                    trust: r.u32()?,
                    energy: r.u32()?,
                    veracity: r.fixed_point("veracity")?,
                });
            }
            Packet::Ack(Ack {
                kind,
                node,
                sequence,
                return_route,
                table,
            })
        }
        TYPE_RPL_MC => {
            if code != 0 {
                return Err(bad_code);
            }
            let base = r.addr()?;
            let n = usize::from(r.u16()?);
            let options = r.take(n)?.to_vec();
            Packet::RplMc(RplMc { base, options })
        }
        TYPE_WARNING => {
            let kind = match code {
                0 => WarningKind::Quarantine,
                1 => WarningKind::Suspicion,
                _ => return Err(bad_code),
            };
            Packet::Warning(Warning {
                kind,
                malicious: r.node()?,
                malicious_rank: Rank(r.u16()?),
                issue_time: r.u64()?,
                origin: r.node()?,
                version: r.u16()?,
            })
        }
        TYPE_DATA => {
            if code != 0 {
                return Err(bad_code);
            }
            let hops = r.u8()?;
            let n = usize::from(r.u16()?);
            if r.buf.len() < n * 8 {
                return Err(DecodeError::Truncated);
            }
            let mut contributors = Vec::with_capacity(n);
            for _ in 0..n {
                contributors.push(DataTag {
                    source: r.node()?,
                    sequence: r.u32()?,
                });
            }
            let key_id = r.u32()?;
            let len = usize::from(r.u16()?);
            let ciphertext = r.take(len)?.to_vec();
            Packet::Data(Data {
                hops,
                contributors,
                key_id,
                ciphertext,
            })
        }
        other => return Err(DecodeError::UnknownType(other)),
    };
    if !r.buf.is_empty() {
        return Err(DecodeError::TrailingBytes(r.buf.len()));
    }
    Ok(packet)
}

/// Contents of the RPL-MC option field used by the root's route probes:
/// probe sequence number followed by the explicit source route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeOption {
    pub sequence: u32,
    pub route: Vec<NodeId>,
}

impl ProbeOption {
    pub fn to_bytes(&self) -> Result<Vec<u8>, EncodeError> {
        let mut w = Writer {
            buf: Vec::with_capacity(6 + 4 * self.route.len()),
        };
        w.u32(self.sequence);
        w.count(self.route.len(), "route")?;
        for n in &self.route {
            w.u32(n.0);
        }
        Ok(w.buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader { buf: bytes };
        let sequence = r.u32()?;
        let route = r.nodes()?;
        if !r.buf.is_empty() {
            return Err(DecodeError::TrailingBytes(r.buf.len()));
        }
        Ok(ProbeOption { sequence, route })
    }
}

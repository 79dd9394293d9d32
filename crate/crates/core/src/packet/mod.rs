// SPDX-License-Identifier: Apache-2.0

//! Byte-level packet representation and the concrete header types.
//!
//! A [`Packet`] owns its bytes and records the headers parsed out of them as
//! a chain of `(type, occurrence, offset, length)` entries. Decoding copies
//! scalar fields out of the buffer and never modifies it; mutation goes
//! through [`Packet::set_header`], which re-encodes the header in place and
//! shifts everything behind it when the encoded length changes.

use std::fmt;

use thiserror::Error;

use crate::value::{Value, ValueKind};

pub mod checksum;
mod eth;
mod icmpv6;
mod ipv6;
mod srv6;
mod tcp;

pub use eth::{EthHdr, MacAddr, ETHERTYPE_IPV6};
pub use icmpv6::{Icmpv6PktTooBig, ICMPV6_PKT_TOO_BIG};
pub use ipv6::{Ipv6Hdr, IPV6_MIN_MTU, PROTO_ICMPV6, PROTO_NONE, PROTO_ROUTING, PROTO_TCP};
pub use srv6::{Srv6RoutingHdr, ROUTING_TYPE_SRH};
pub use tcp::TcpHdr;

/// Symbolic name of a header type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HeaderId(pub &'static str);

impl HeaderId {
    pub const ETH: HeaderId = HeaderId("EthHdr");
    pub const IPV6: HeaderId = HeaderId("Ipv6Hdr");
    pub const TCP: HeaderId = HeaderId("TcpHdr");
    pub const ICMPV6_TOO_BIG: HeaderId = HeaderId("Icmpv6PktTooBig");
    pub const SRV6: HeaderId = HeaderId("Srv6RoutingHdr");

    pub fn name(self) -> &'static str {
        self.0
    }
}

impl fmt::Display for HeaderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PacketError {
    #[error("{header} truncated: need {needed} bytes, {available} available")]
    Truncated { header: HeaderId, needed: usize, available: usize },
    #[error("{header}: field {field} is {found}, expected {expected}")]
    FieldMismatch { header: HeaderId, field: &'static str, expected: u64, found: u64 },
    #[error("{header}: {reason}")]
    Invariant { header: HeaderId, reason: String },
    #[error("{header} at offset {offset} overlaps parsed headers ending at {payload_offset}")]
    Overlap { header: HeaderId, offset: usize, payload_offset: usize },
    #[error("packet has no {header} occurrence {occurrence}")]
    MissingHeader { header: HeaderId, occurrence: usize },
    #[error("{header} is not registered")]
    Unregistered { header: HeaderId },
}

pub(crate) fn need(header: HeaderId, buf: &[u8], needed: usize) -> Result<(), PacketError> {
    if buf.len() < needed {
        Err(PacketError::Truncated { header, needed, available: buf.len() })
    } else {
        Ok(())
    }
}

/// How many bytes a header occupies.
#[derive(Clone, Copy)]
pub enum SizeRule {
    Fixed(usize),
    /// Computed from the bytes starting at the header; fails when the
    /// header cannot be measured.
    Computed(fn(&[u8]) -> Result<usize, PacketError>),
}

impl SizeRule {
    pub fn measure(&self, header: HeaderId, rest: &[u8]) -> Result<usize, PacketError> {
        let len = match self {
            SizeRule::Fixed(n) => *n,
            SizeRule::Computed(f) => f(rest)?,
        };
        need(header, rest, len)?;
        Ok(len)
    }
}

impl fmt::Debug for SizeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeRule::Fixed(n) => write!(f, "Fixed({n})"),
            SizeRule::Computed(_) => f.write_str("Computed"),
        }
    }
}

/// Named field or function over the header at a given chain index.
#[derive(Clone, Copy)]
pub struct Accessor {
    pub name: &'static str,
    pub kind: ValueKind,
    pub get: fn(&Packet, usize) -> Value,
}

impl fmt::Debug for Accessor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Accessor").field("name", &self.name).field("kind", &self.kind).finish()
    }
}

/// A concrete wire header.
///
/// `PREDECESSORS` plays the role of a "previous header" declaration: the
/// header may only be parsed directly after one of the listed types. An
/// empty list marks a chain root.
pub trait Header: Sized {
    const ID: HeaderId;
    const PREDECESSORS: &'static [HeaderId];
    /// Enclosing protocol header this one is parameterized by (its
    /// pseudo-header source), if any.
    const PARAMETER: Option<HeaderId> = None;

    fn size_rule() -> SizeRule;

    /// Decodes the header at the front of `buf`, returning it and the number
    /// of bytes it occupies.
    fn decode(buf: &[u8]) -> Result<(Self, usize), PacketError>;

    fn encode(&self) -> Result<Vec<u8>, PacketError>;

    fn accessors() -> Vec<Accessor>;

    /// Header type announced for the bytes following this one.
    fn next(_this: &[u8], _rest: &[u8]) -> Option<HeaderId> {
        None
    }
}

/// Next header implied by an IPv6-style protocol number.
pub(crate) fn dispatch_protocol(proto: u8, rest: &[u8]) -> Option<HeaderId> {
    match proto {
        PROTO_TCP => Some(HeaderId::TCP),
        PROTO_ICMPV6 if rest.first() == Some(&ICMPV6_PKT_TOO_BIG) => Some(HeaderId::ICMPV6_TOO_BIG),
        PROTO_ROUTING if rest.get(2) == Some(&ROUTING_TYPE_SRH) => Some(HeaderId::SRV6),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainEntry {
    pub header: HeaderId,
    /// Index among earlier entries of the same header type.
    pub occurrence: usize,
    pub offset: usize,
    pub len: usize,
}

impl ChainEntry {
    pub fn end(&self) -> usize {
        self.offset + self.len
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Packet {
    bytes: Vec<u8>,
    chain: Vec<ChainEntry>,
    payload_offset: usize,
}

impl Packet {
    /// Unparsed packet over `bytes`.
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Packet { bytes, chain: Vec::new(), payload_offset: 0 }
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn chain(&self) -> &[ChainEntry] {
        &self.chain
    }

    /// Offset of the first byte past the last parsed header.
    pub fn payload_offset(&self) -> usize {
        self.payload_offset
    }

    pub fn payload(&self) -> &[u8] {
        &self.bytes[self.payload_offset..]
    }

    pub fn header_bytes(&self, index: usize) -> &[u8] {
        let e = &self.chain[index];
        &self.bytes[e.offset..e.end()]
    }

    /// Bytes from the start of the chain entry at `index` to the end of the packet.
    pub fn bytes_from(&self, index: usize) -> &[u8] {
        &self.bytes[self.chain[index].offset..]
    }

    /// Chain index of the given occurrence of a header type.
    pub fn position(&self, header: HeaderId, occurrence: usize) -> Option<usize> {
        self.chain.iter().position(|e| e.header == header && e.occurrence == occurrence)
    }

    /// Drops the parsed chain, keeping the bytes.
    pub fn clear_chain(&mut self) {
        self.chain.clear();
        self.payload_offset = 0;
    }

    /// Records a header of `len` bytes at `offset` in the chain.
    pub fn push_entry(&mut self, header: HeaderId, offset: usize, len: usize) -> Result<(), PacketError> {
        if offset < self.payload_offset {
            return Err(PacketError::Overlap { header, offset, payload_offset: self.payload_offset });
        }
        need(header, self.bytes.get(offset..).unwrap_or(&[]), len)?;
        let occurrence = self.chain.iter().filter(|e| e.header == header).count();
        self.chain.push(ChainEntry { header, occurrence, offset, len });
        self.payload_offset = offset + len;
        Ok(())
    }

    /// Decodes a header of type `H` at `at` and appends it to the chain.
    pub fn parse_header<H: Header>(&mut self, at: usize) -> Result<(H, usize), PacketError> {
        if at < self.payload_offset {
            return Err(PacketError::Overlap { header: H::ID, offset: at, payload_offset: self.payload_offset });
        }
        let rest = self.bytes.get(at..).unwrap_or(&[]);
        let (h, len) = H::decode(rest)?;
        self.push_entry(H::ID, at, len)?;
        Ok((h, len))
    }

    /// Decodes a header of type `H` directly after the last parsed one.
    pub fn parse_next<H: Header>(&mut self) -> Result<H, PacketError> {
        self.parse_header::<H>(self.payload_offset).map(|(h, _)| h)
    }

    /// Decodes the given occurrence of `H` from the chain.
    pub fn header<H: Header>(&self, occurrence: usize) -> Result<H, PacketError> {
        let idx = self
            .position(H::ID, occurrence)
            .ok_or(PacketError::MissingHeader { header: H::ID, occurrence })?;
        H::decode(self.bytes_from(idx)).map(|(h, _)| h)
    }

    /// Re-encodes `h` over the given occurrence of `H`. When the encoded
    /// length differs, the trailing bytes move and later chain offsets are
    /// adjusted.
    pub fn set_header<H: Header>(&mut self, occurrence: usize, h: &H) -> Result<(), PacketError> {
        let idx = self
            .position(H::ID, occurrence)
            .ok_or(PacketError::MissingHeader { header: H::ID, occurrence })?;
        let encoded = h.encode()?;
        self.replace_entry_bytes(idx, &encoded);
        Ok(())
    }

    fn replace_entry_bytes(&mut self, idx: usize, encoded: &[u8]) {
        let ChainEntry { offset, len, .. } = self.chain[idx];
        if encoded.len() == len {
            self.bytes[offset..offset + len].copy_from_slice(encoded);
            return;
        }
        self.bytes.splice(offset..offset + len, encoded.iter().copied());
        let delta = encoded.len() as isize - len as isize;
        self.chain[idx].len = encoded.len();
        for e in &mut self.chain[idx + 1..] {
            e.offset = (e.offset as isize + delta) as usize;
        }
        self.payload_offset = (self.payload_offset as isize + delta) as usize;
    }
}

/// Assembles a packet header by header.
#[derive(Debug, Default)]
pub struct PacketBuilder {
    packet: Packet,
}

impl PacketBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push<H: Header>(mut self, h: &H) -> Result<Self, PacketError> {
        let encoded = h.encode()?;
        let at = self.packet.bytes.len();
        self.packet.bytes.extend_from_slice(&encoded);
        self.packet.push_entry(H::ID, at, encoded.len())?;
        Ok(self)
    }

    pub fn payload(mut self, data: &[u8]) -> Packet {
        self.packet.bytes.extend_from_slice(data);
        self.packet
    }

    pub fn build(self) -> Packet {
        self.packet
    }
}

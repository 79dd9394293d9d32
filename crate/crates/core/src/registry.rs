// SPDX-License-Identifier: Apache-2.0

//! Header descriptors, predecessor rules and header-order verification.
//!
//! Every header type registers a descriptor naming the types it may directly
//! follow. An [`OrderSpec`] is accepted only if each adjacent pair respects
//! those rules; this runs once when a pipeline is assembled, never per
//! packet. [`HeaderRegistry::match_chain`] is the per-packet counterpart,
//! comparing what was actually parsed with an expected order.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::packet::{
    Accessor, EthHdr, Header, HeaderId, Icmpv6PktTooBig, Ipv6Hdr, Packet, PacketError, SizeRule, Srv6RoutingHdr,
    TcpHdr,
};

/// Registry entry for one header type.
#[derive(Debug, Clone)]
pub struct HeaderDescriptor {
    pub id: HeaderId,
    pub size: SizeRule,
    /// Types allowed directly before this one; empty marks a chain root.
    pub predecessors: Vec<HeaderId>,
    /// Enclosing protocol the header is parameterized by.
    pub parameter: Option<HeaderId>,
    pub accessors: Vec<Accessor>,
    /// Rejects bytes that measure correctly but do not decode.
    pub validate: fn(&[u8]) -> Result<(), PacketError>,
    /// Decodes and re-encodes the header bytes.
    pub reencode: fn(&[u8]) -> Result<Vec<u8>, PacketError>,
    /// Header announced after this one, given its bytes and the rest.
    pub next: fn(&[u8], &[u8]) -> Option<HeaderId>,
}

fn validate_as<H: Header>(b: &[u8]) -> Result<(), PacketError> {
    H::decode(b).map(|_| ())
}

fn reencode_as<H: Header>(b: &[u8]) -> Result<Vec<u8>, PacketError> {
    H::decode(b)?.0.encode()
}

impl HeaderDescriptor {
    /// Descriptor derived from a concrete header type.
    pub fn of<H: Header>() -> Self {
        HeaderDescriptor {
            id: H::ID,
            size: H::size_rule(),
            predecessors: H::PREDECESSORS.to_vec(),
            parameter: H::PARAMETER,
            accessors: H::accessors(),
            validate: validate_as::<H>,
            reencode: reencode_as::<H>,
            next: H::next,
        }
    }

    pub fn accessor(&self, name: &str) -> Option<&Accessor> {
        self.accessors.iter().find(|a| a.name == name)
    }

    pub fn is_root(&self) -> bool {
        self.predecessors.is_empty()
    }
}

/// One element of an expected header order, e.g. `TcpHdr<Ipv6Hdr>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrderElem {
    pub header: HeaderId,
    pub param: Option<HeaderId>,
}

impl OrderElem {
    pub fn new(header: HeaderId) -> Self {
        OrderElem { header, param: None }
    }

    pub fn with_param(header: HeaderId, param: HeaderId) -> Self {
        OrderElem { header, param: Some(param) }
    }
}

impl fmt::Display for OrderElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param {
            Some(p) => write!(f, "{}<{}>", self.header, p),
            None => write!(f, "{}", self.header),
        }
    }
}

/// Expected header order of a packet, outermost first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderSpec(Vec<OrderElem>);

impl OrderSpec {
    pub fn new(elems: Vec<OrderElem>) -> Result<Self, OrderError> {
        if elems.is_empty() {
            return Err(OrderError::Empty);
        }
        Ok(OrderSpec(elems))
    }

    pub fn elems(&self) -> &[OrderElem] {
        &self.0
    }

    pub fn contains(&self, header: HeaderId) -> bool {
        self.0.iter().any(|e| e.header == header)
    }
}

impl fmt::Display for OrderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" => ")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("header type {0} is already registered")]
    Duplicate(HeaderId),
    #[error("{header} references unregistered header type {missing}")]
    Dangling { header: HeaderId, missing: HeaderId },
    #[error("{header} declares accessor {name} twice")]
    DuplicateAccessor { header: HeaderId, name: &'static str },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("header order is empty")]
    Empty,
    #[error("unknown header type {0}")]
    Unknown(HeaderId),
    #[error("{0} cannot start a header chain")]
    NotRoot(HeaderId),
    #[error("{next} may not follow {prev}")]
    Predecessor { prev: HeaderId, next: HeaderId },
    #[error("{header} takes no parameter {param}")]
    UnexpectedParameter { header: HeaderId, param: HeaderId },
    #[error("{header}<{param}> requires {param} earlier in the order")]
    MissingParameter { header: HeaderId, param: HeaderId },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainMismatch {
    #[error("expected {expected} headers, packet has {actual}")]
    Length { expected: usize, actual: usize },
    #[error("header {index}: expected {expected}, found {found}")]
    Header { index: usize, expected: OrderElem, found: HeaderId },
    #[error("header {index}: {header} needs an enclosing {param}")]
    Parameter { index: usize, header: HeaderId, param: HeaderId },
}

impl ChainMismatch {
    /// Index of the first offending header, if the mismatch is positional.
    pub fn index(&self) -> Option<usize> {
        match self {
            ChainMismatch::Length { .. } => None,
            ChainMismatch::Header { index, .. } | ChainMismatch::Parameter { index, .. } => Some(*index),
        }
    }
}

#[derive(Debug, Default)]
pub struct RegistryBuilder {
    descriptors: Vec<HeaderDescriptor>,
    index: HashMap<HeaderId, usize>,
}

impl RegistryBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a descriptor. Every referenced predecessor or parameter must
    /// already be registered (a type may list itself as predecessor).
    pub fn register(&mut self, d: HeaderDescriptor) -> Result<&mut Self, RegistryError> {
        if self.index.contains_key(&d.id) {
            return Err(RegistryError::Duplicate(d.id));
        }
        for &r in d.predecessors.iter().chain(d.parameter.iter()) {
            if r != d.id && !self.index.contains_key(&r) {
                return Err(RegistryError::Dangling { header: d.id, missing: r });
            }
        }
        let mut names = HashSet::new();
        for a in &d.accessors {
            if !names.insert(a.name) {
                return Err(RegistryError::DuplicateAccessor { header: d.id, name: a.name });
            }
        }
        self.index.insert(d.id, self.descriptors.len());
        self.descriptors.push(d);
        Ok(self)
    }

    pub fn register_header<H: Header>(&mut self) -> Result<&mut Self, RegistryError> {
        self.register(HeaderDescriptor::of::<H>())
    }

    /// Freezes the registry. No header types can be added afterwards.
    pub fn finalize(self) -> HeaderRegistry {
        HeaderRegistry { descriptors: self.descriptors, index: self.index, verify_calls: AtomicU64::new(0) }
    }
}

/// Frozen set of header descriptors; shareable across threads.
#[derive(Debug)]
pub struct HeaderRegistry {
    descriptors: Vec<HeaderDescriptor>,
    index: HashMap<HeaderId, usize>,
    verify_calls: AtomicU64,
}

impl HeaderRegistry {
    /// Ethernet, IPv6, SRv6 routing, TCP and ICMPv6 Packet Too Big.
    pub fn standard() -> Self {
        let mut b = RegistryBuilder::new();
        b.register_header::<EthHdr>()
            .and_then(|b| b.register_header::<Ipv6Hdr>())
            .and_then(|b| b.register_header::<Srv6RoutingHdr>())
            .and_then(|b| b.register_header::<TcpHdr>())
            .and_then(|b| b.register_header::<Icmpv6PktTooBig>())
            .expect("standard headers are consistent");
        b.finalize()
    }

    pub fn get(&self, id: HeaderId) -> Option<&HeaderDescriptor> {
        self.index.get(&id).map(|&i| &self.descriptors[i])
    }

    /// Resolves a header type by name.
    pub fn lookup(&self, name: &str) -> Option<HeaderId> {
        self.descriptors.iter().find(|d| d.id.name() == name).map(|d| d.id)
    }

    pub fn descriptors(&self) -> &[HeaderDescriptor] {
        &self.descriptors
    }

    /// Checks that `spec` starts at a chain root and that every adjacent
    /// pair obeys the predecessor rules. Parameters must name the header's
    /// declared enclosing protocol and appear earlier in the order.
    pub fn verify_order(&self, spec: &OrderSpec) -> Result<(), OrderError> {
        self.verify_calls.fetch_add(1, Ordering::Relaxed);
        let elems = spec.elems();
        for (i, e) in elems.iter().enumerate() {
            let d = self.get(e.header).ok_or(OrderError::Unknown(e.header))?;
            if i == 0 && !d.is_root() {
                return Err(OrderError::NotRoot(e.header));
            }
            if i > 0 {
                let prev = elems[i - 1].header;
                if !d.predecessors.contains(&prev) {
                    return Err(OrderError::Predecessor { prev, next: e.header });
                }
            }
            if let Some(p) = e.param {
                if d.parameter != Some(p) {
                    return Err(OrderError::UnexpectedParameter { header: e.header, param: p });
                }
                if !elems[..i].iter().any(|x| x.header == p) {
                    return Err(OrderError::MissingParameter { header: e.header, param: p });
                }
            }
        }
        Ok(())
    }

    /// Number of [`verify_order`](Self::verify_order) calls so far.
    pub fn verify_order_calls(&self) -> u64 {
        self.verify_calls.load(Ordering::Relaxed)
    }

    /// Compares the packet's parsed chain with `spec` element by element.
    pub fn match_chain(&self, packet: &Packet, spec: &OrderSpec) -> Result<(), ChainMismatch> {
        match_chain(packet, spec)
    }

    /// Parses one header of type `id` at `at` using its descriptor and
    /// appends it to the chain. Returns the consumed length.
    pub fn parse_header(&self, packet: &mut Packet, id: HeaderId, at: usize) -> Result<usize, PacketError> {
        let d = self.get(id).ok_or(PacketError::Unregistered { header: id })?;
        if at < packet.payload_offset() {
            return Err(PacketError::Overlap { header: id, offset: at, payload_offset: packet.payload_offset() });
        }
        let rest = packet.bytes().get(at..).unwrap_or(&[]);
        let len = d.size.measure(id, rest)?;
        (d.validate)(rest)?;
        packet.push_entry(id, at, len)?;
        Ok(len)
    }

    /// Re-parses the packet from `root`, following the next-header hints of
    /// each descriptor. Stops quietly at a header type nobody announces; a
    /// header that is announced but fails to parse ends the chain there and
    /// is reported.
    pub fn parse_chain(&self, packet: &mut Packet, root: HeaderId) -> Result<(), PacketError> {
        packet.clear_chain();
        let mut current = Some(root);
        while let Some(id) = current {
            let at = packet.payload_offset();
            let len = self.parse_header(packet, id, at)?;
            let d = self.get(id).expect("parsed header is registered");
            let bytes = packet.bytes();
            current = (d.next)(&bytes[at..at + len], &bytes[at + len..]).filter(|n| self.get(*n).is_some());
        }
        Ok(())
    }

    /// Parses the packet header by header exactly as `spec` prescribes.
    pub fn parse_order(&self, packet: &mut Packet, spec: &OrderSpec) -> Result<(), PacketError> {
        packet.clear_chain();
        for e in spec.elems() {
            self.parse_header(packet, e.header, packet.payload_offset())?;
        }
        Ok(())
    }

    /// Re-encodes every parsed header over a copy of the packet bytes.
    pub fn reserialize(&self, packet: &Packet) -> Result<Vec<u8>, PacketError> {
        let mut out = packet.bytes().to_vec();
        for (i, e) in packet.chain().iter().enumerate() {
            let d = self.get(e.header).ok_or(PacketError::Unregistered { header: e.header })?;
            let encoded = (d.reencode)(packet.bytes_from(i))?;
            out[e.offset..e.offset + encoded.len()].copy_from_slice(&encoded);
        }
        Ok(out)
    }
}

pub fn match_chain(packet: &Packet, spec: &OrderSpec) -> Result<(), ChainMismatch> {
    let chain = packet.chain();
    for (index, (entry, want)) in chain.iter().zip(spec.elems()).enumerate() {
        if entry.header != want.header {
            return Err(ChainMismatch::Header { index, expected: *want, found: entry.header });
        }
        if let Some(param) = want.param {
            if !chain[..index].iter().any(|e| e.header == param) {
                return Err(ChainMismatch::Parameter { index, header: want.header, param });
            }
        }
    }
    if chain.len() != spec.elems().len() {
        return Err(ChainMismatch::Length { expected: spec.elems().len(), actual: chain.len() });
    }
    Ok(())
}

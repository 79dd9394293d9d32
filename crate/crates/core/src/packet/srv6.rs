// SPDX-License-Identifier: Apache-2.0

use std::net::Ipv6Addr;

use super::{dispatch_protocol, need, Accessor, Header, HeaderId, Packet, PacketError, SizeRule};
use crate::value::{Value, ValueKind};

pub const ROUTING_TYPE_SRH: u8 = 4;

/// IPv6 Segment Routing header (routing type 4) without TLVs.
///
/// ```text
/// +---------------+---------------+---------------+---------------+
/// |  Next Header  |  Hdr Ext Len  | Routing Type  | Segments Left |
/// +---------------+---------------+---------------+---------------+
/// |  Last Entry   |     Flags     |              Tag              |
/// +---------------+---------------+-------------------------------+
/// |            Segment List[0] (128-bit IPv6 address)             |
/// |                              ...                              |
/// |            Segment List[n] (128-bit IPv6 address)             |
/// +---------------------------------------------------------------+
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Srv6RoutingHdr {
    pub next_header: u8,
    /// Length in 8-octet units, not counting the first 8 octets.
    pub hdr_ext_len: u8,
    pub segments_left: u8,
    /// Index of the last element of the segment list.
    pub last_entry: u8,
    pub flags: u8,
    pub tag: u16,
    pub segments: Vec<Ipv6Addr>,
}

impl Srv6RoutingHdr {
    pub const BASE_SIZE: usize = 8;
    pub const SEGMENT_SIZE: usize = 16;
    /// `hdr_ext_len` is 8 bits wide and grows by 2 per segment.
    pub const MAX_SEGMENTS: usize = 127;

    /// Header over `segments` with the length fields derived from the list.
    pub fn new(next_header: u8, segments_left: u8, segments: Vec<Ipv6Addr>) -> Self {
        let n = segments.len();
        Srv6RoutingHdr {
            next_header,
            hdr_ext_len: (2 * n) as u8,
            segments_left,
            last_entry: n.saturating_sub(1) as u8,
            flags: 0,
            tag: 0,
            segments,
        }
    }

    pub fn len(&self) -> usize {
        Self::BASE_SIZE + 8 * self.hdr_ext_len as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Appends a segment and keeps `last_entry` and `hdr_ext_len` in step.
    /// `segments_left` is left to the caller.
    pub fn push_segment(&mut self, segment: Ipv6Addr) -> Result<(), PacketError> {
        if self.segments.len() >= Self::MAX_SEGMENTS {
            return Err(PacketError::Invariant {
                header: Self::ID,
                reason: format!("segment list full ({} segments)", self.segments.len()),
            });
        }
        self.segments.push(segment);
        self.last_entry = (self.segments.len() - 1) as u8;
        self.hdr_ext_len = (2 * self.segments.len()) as u8;
        Ok(())
    }

    fn check(&self) -> Result<(), PacketError> {
        let n = self.segments.len();
        let fail = |reason: String| Err(PacketError::Invariant { header: Self::ID, reason });
        if n == 0 || n != self.last_entry as usize + 1 {
            return fail(format!("{n} segments but last entry {}", self.last_entry));
        }
        if self.hdr_ext_len as usize != 2 * n {
            return fail(format!("hdr ext len {} for {n} segments", self.hdr_ext_len));
        }
        if self.segments_left as usize > n {
            return fail(format!("segments left {} exceeds {n} segments", self.segments_left));
        }
        Ok(())
    }
}

fn measure(buf: &[u8]) -> Result<usize, PacketError> {
    need(HeaderId::SRV6, buf, Srv6RoutingHdr::BASE_SIZE)?;
    if buf[2] != ROUTING_TYPE_SRH {
        return Err(PacketError::FieldMismatch {
            header: HeaderId::SRV6,
            field: "routing_type",
            expected: ROUTING_TYPE_SRH.into(),
            found: buf[2].into(),
        });
    }
    Ok(Srv6RoutingHdr::BASE_SIZE + 8 * buf[1] as usize)
}

fn segments_bytes(p: &Packet, i: usize) -> Value {
    Value::Bytes(p.header_bytes(i)[Srv6RoutingHdr::BASE_SIZE..].to_vec())
}

impl Header for Srv6RoutingHdr {
    const ID: HeaderId = HeaderId::SRV6;
    const PREDECESSORS: &'static [HeaderId] = &[HeaderId::IPV6, HeaderId::SRV6];

    fn size_rule() -> SizeRule {
        SizeRule::Computed(measure)
    }

    fn decode(buf: &[u8]) -> Result<(Self, usize), PacketError> {
        let len = measure(buf)?;
        need(Self::ID, buf, len)?;
        let segments = buf[Self::BASE_SIZE..len]
            .chunks_exact(Self::SEGMENT_SIZE)
            .map(|c| Ipv6Addr::from(<[u8; 16]>::try_from(c).expect("16-byte chunk")))
            .collect();
        let h = Srv6RoutingHdr {
            next_header: buf[0],
            hdr_ext_len: buf[1],
            segments_left: buf[3],
            last_entry: buf[4],
            flags: buf[5],
            tag: u16::from_be_bytes([buf[6], buf[7]]),
            segments,
        };
        h.check()?;
        Ok((h, len))
    }

    fn encode(&self) -> Result<Vec<u8>, PacketError> {
        self.check()?;
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&[
            self.next_header,
            self.hdr_ext_len,
            ROUTING_TYPE_SRH,
            self.segments_left,
            self.last_entry,
            self.flags,
        ]);
        out.extend_from_slice(&self.tag.to_be_bytes());
        for s in &self.segments {
            out.extend_from_slice(&s.octets());
        }
        Ok(out)
    }

    fn accessors() -> Vec<Accessor> {
        vec![
            Accessor { name: "next_header", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(p.header_bytes(i)[0].into()) },
            Accessor { name: "hdr_ext_len", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(p.header_bytes(i)[1].into()) },
            Accessor { name: "routing_type", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(p.header_bytes(i)[2].into()) },
            Accessor { name: "segments_left", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(p.header_bytes(i)[3].into()) },
            Accessor { name: "last_entry", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(p.header_bytes(i)[4].into()) },
            Accessor { name: "flags", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(p.header_bytes(i)[5].into()) },
            Accessor {
                name: "tag",
                kind: ValueKind::Int,
                get: |p: &Packet, i| {
                    let b = p.header_bytes(i);
                    Value::Int(u16::from_be_bytes([b[6], b[7]]).into())
                },
            },
            Accessor {
                name: "segment_count",
                kind: ValueKind::Int,
                get: |p: &Packet, i| Value::Int(((p.chain()[i].len - Srv6RoutingHdr::BASE_SIZE) / Srv6RoutingHdr::SEGMENT_SIZE) as u64),
            },
            Accessor { name: "segments", kind: ValueKind::Bytes, get: segments_bytes },
        ]
    }

    fn next(this: &[u8], rest: &[u8]) -> Option<HeaderId> {
        dispatch_protocol(this[0], rest)
    }
}

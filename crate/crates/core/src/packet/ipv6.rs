// SPDX-License-Identifier: Apache-2.0

use std::net::Ipv6Addr;

use super::{dispatch_protocol, need, Accessor, Header, HeaderId, Packet, PacketError, SizeRule};
use crate::value::{Value, ValueKind};

/// Smallest link MTU every IPv6 link must support.
pub const IPV6_MIN_MTU: u32 = 1280;

pub const PROTO_TCP: u8 = 6;
pub const PROTO_ROUTING: u8 = 43;
pub const PROTO_ICMPV6: u8 = 58;
pub const PROTO_NONE: u8 = 59;

/// Fixed IPv6 header. The version nibble is implied (always 6).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ipv6Hdr {
    pub traffic_class: u8,
    /// 20 bits.
    pub flow_label: u32,
    /// Bytes following this header, extension headers included.
    pub payload_len: u16,
    pub next_header: u8,
    pub hop_limit: u8,
    pub src: Ipv6Addr,
    pub dst: Ipv6Addr,
}

impl Default for Ipv6Hdr {
    fn default() -> Self {
        Ipv6Hdr {
            traffic_class: 0,
            flow_label: 0,
            payload_len: 0,
            next_header: PROTO_NONE,
            hop_limit: 64,
            src: Ipv6Addr::UNSPECIFIED,
            dst: Ipv6Addr::UNSPECIFIED,
        }
    }
}

impl Ipv6Hdr {
    pub const SIZE: usize = 40;

    pub fn swap_addresses(&mut self) {
        std::mem::swap(&mut self.src, &mut self.dst);
    }
}

fn addr_at(b: &[u8], at: usize) -> Ipv6Addr {
    let mut a = [0u8; 16];
    a.copy_from_slice(&b[at..at + 16]);
    Ipv6Addr::from(a)
}

fn u16_at(b: &[u8], at: usize) -> u64 {
    u16::from_be_bytes([b[at], b[at + 1]]).into()
}

impl Header for Ipv6Hdr {
    const ID: HeaderId = HeaderId::IPV6;
    const PREDECESSORS: &'static [HeaderId] = &[HeaderId::ETH];

    fn size_rule() -> SizeRule {
        SizeRule::Fixed(Self::SIZE)
    }

    fn decode(buf: &[u8]) -> Result<(Self, usize), PacketError> {
        need(Self::ID, buf, Self::SIZE)?;
        let version = buf[0] >> 4;
        if version != 6 {
            return Err(PacketError::FieldMismatch {
                header: Self::ID,
                field: "version",
                expected: 6,
                found: version.into(),
            });
        }
        let h = Ipv6Hdr {
            traffic_class: (buf[0] << 4) | (buf[1] >> 4),
            flow_label: u32::from_be_bytes([0, buf[1] & 0x0f, buf[2], buf[3]]),
            payload_len: u16::from_be_bytes([buf[4], buf[5]]),
            next_header: buf[6],
            hop_limit: buf[7],
            src: addr_at(buf, 8),
            dst: addr_at(buf, 24),
        };
        Ok((h, Self::SIZE))
    }

    fn encode(&self) -> Result<Vec<u8>, PacketError> {
        if self.flow_label > 0xf_ffff {
            return Err(PacketError::Invariant {
                header: Self::ID,
                reason: format!("flow label {:#x} exceeds 20 bits", self.flow_label),
            });
        }
        let mut out = Vec::with_capacity(Self::SIZE);
        let word = (6u32 << 28) | (u32::from(self.traffic_class) << 20) | self.flow_label;
        out.extend_from_slice(&word.to_be_bytes());
        out.extend_from_slice(&self.payload_len.to_be_bytes());
        out.push(self.next_header);
        out.push(self.hop_limit);
        out.extend_from_slice(&self.src.octets());
        out.extend_from_slice(&self.dst.octets());
        Ok(out)
    }

    fn accessors() -> Vec<Accessor> {
        vec![
            Accessor { name: "version", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int((p.header_bytes(i)[0] >> 4).into()) },
            Accessor {
                name: "traffic_class",
                kind: ValueKind::Int,
                get: |p: &Packet, i| {
                    let b = p.header_bytes(i);
                    Value::Int(((b[0] << 4) | (b[1] >> 4)).into())
                },
            },
            Accessor {
                name: "flow_label",
                kind: ValueKind::Int,
                get: |p: &Packet, i| {
                    let b = p.header_bytes(i);
                    Value::Int(u32::from_be_bytes([0, b[1] & 0x0f, b[2], b[3]]).into())
                },
            },
            Accessor { name: "payload_len", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(u16_at(p.header_bytes(i), 4)) },
            Accessor { name: "next_header", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(p.header_bytes(i)[6].into()) },
            Accessor { name: "hop_limit", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(p.header_bytes(i)[7].into()) },
            Accessor { name: "src", kind: ValueKind::Ipv6, get: |p: &Packet, i| Value::Ipv6(addr_at(p.header_bytes(i), 8)) },
            Accessor { name: "dst", kind: ValueKind::Ipv6, get: |p: &Packet, i| Value::Ipv6(addr_at(p.header_bytes(i), 24)) },
            // Bytes actually present behind the fixed header.
            Accessor {
                name: "trailing_len",
                kind: ValueKind::Int,
                get: |p: &Packet, i| Value::Int((p.len() - p.chain()[i].end()) as u64),
            },
        ]
    }

    fn next(this: &[u8], rest: &[u8]) -> Option<HeaderId> {
        dispatch_protocol(this[6], rest)
    }
}

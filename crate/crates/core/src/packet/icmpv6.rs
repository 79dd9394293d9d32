// SPDX-License-Identifier: Apache-2.0

use super::{need, Accessor, Header, HeaderId, Packet, PacketError, SizeRule};
use crate::packet::checksum;
use crate::packet::ipv6::{Ipv6Hdr, PROTO_ICMPV6};
use crate::value::{Value, ValueKind};

pub const ICMPV6_PKT_TOO_BIG: u8 = 2;

/// ICMPv6 Packet Too Big message (type 2, code 0).
///
/// ```text
///  0               1               2               3
/// +---------------+---------------+-------------------------------+
/// |     Type      |     Code      |           Checksum            |
/// +---------------+---------------+-------------------------------+
/// |                              MTU                              |
/// +---------------------------------------------------------------+
/// |                 As much of the invoking packet                |
/// |        as fits without exceeding the minimum IPv6 MTU         |
/// ```
///
/// The message runs to the end of the packet.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Icmpv6PktTooBig {
    pub checksum: u16,
    pub mtu: u32,
    pub invoking_packet: Vec<u8>,
}

impl Icmpv6PktTooBig {
    pub const FIXED_SIZE: usize = 8;
    pub const CODE: u8 = 0;

    pub fn len(&self) -> usize {
        Self::FIXED_SIZE + self.invoking_packet.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Checksum over the IPv6 pseudo-header of `ip` and this message.
    pub fn compute_checksum(&self, ip: &Ipv6Hdr) -> Result<u16, PacketError> {
        let msg = Icmpv6PktTooBig { checksum: 0, ..self.clone() }.encode()?;
        let len = u32::try_from(msg.len()).map_err(|_| PacketError::Invariant {
            header: Self::ID,
            reason: "message exceeds 32-bit length".into(),
        })?;
        Ok(checksum::pseudo_header_checksum(&ip.src, &ip.dst, len, PROTO_ICMPV6, &msg)
            .expect("length computed from the message itself"))
    }
}

fn measure(buf: &[u8]) -> Result<usize, PacketError> {
    need(HeaderId::ICMPV6_TOO_BIG, buf, Icmpv6PktTooBig::FIXED_SIZE)?;
    Ok(buf.len())
}

fn checksum_valid(p: &Packet, i: usize) -> Value {
    let Some(ip_idx) = p.chain()[..i].iter().rposition(|e| e.header == HeaderId::IPV6) else {
        return Value::Int(0);
    };
    let Ok((ip, _)) = Ipv6Hdr::decode(p.header_bytes(ip_idx)) else {
        return Value::Int(0);
    };
    let msg = p.bytes_from(i);
    let ok = checksum::pseudo_header_checksum(&ip.src, &ip.dst, msg.len() as u32, PROTO_ICMPV6, msg) == Ok(0);
    Value::Int(ok.into())
}

impl Header for Icmpv6PktTooBig {
    const ID: HeaderId = HeaderId::ICMPV6_TOO_BIG;
    const PREDECESSORS: &'static [HeaderId] = &[HeaderId::IPV6, HeaderId::SRV6];
    const PARAMETER: Option<HeaderId> = Some(HeaderId::IPV6);

    fn size_rule() -> SizeRule {
        SizeRule::Computed(measure)
    }

    fn decode(buf: &[u8]) -> Result<(Self, usize), PacketError> {
        let len = measure(buf)?;
        if buf[0] != ICMPV6_PKT_TOO_BIG {
            return Err(PacketError::FieldMismatch {
                header: Self::ID,
                field: "type",
                expected: ICMPV6_PKT_TOO_BIG.into(),
                found: buf[0].into(),
            });
        }
        if buf[1] != Self::CODE {
            return Err(PacketError::FieldMismatch {
                header: Self::ID,
                field: "code",
                expected: Self::CODE.into(),
                found: buf[1].into(),
            });
        }
        let h = Icmpv6PktTooBig {
            checksum: u16::from_be_bytes([buf[2], buf[3]]),
            mtu: u32::from_be_bytes([buf[4], buf[5], buf[6], buf[7]]),
            invoking_packet: buf[8..len].to_vec(),
        };
        Ok((h, len))
    }

    fn encode(&self) -> Result<Vec<u8>, PacketError> {
        let mut out = Vec::with_capacity(self.len());
        out.push(ICMPV6_PKT_TOO_BIG);
        out.push(Self::CODE);
        out.extend_from_slice(&self.checksum.to_be_bytes());
        out.extend_from_slice(&self.mtu.to_be_bytes());
        out.extend_from_slice(&self.invoking_packet);
        Ok(out)
    }

    fn accessors() -> Vec<Accessor> {
        vec![
            Accessor { name: "msg_type", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(p.header_bytes(i)[0].into()) },
            Accessor { name: "code", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(p.header_bytes(i)[1].into()) },
            Accessor {
                name: "checksum",
                kind: ValueKind::Int,
                get: |p: &Packet, i| {
                    let b = p.header_bytes(i);
                    Value::Int(u16::from_be_bytes([b[2], b[3]]).into())
                },
            },
            Accessor {
                name: "mtu",
                kind: ValueKind::Int,
                get: |p: &Packet, i| {
                    let b = p.header_bytes(i);
                    Value::Int(u32::from_be_bytes([b[4], b[5], b[6], b[7]]).into())
                },
            },
            Accessor {
                name: "invoking_packet",
                kind: ValueKind::Bytes,
                get: |p: &Packet, i| Value::Bytes(p.header_bytes(i)[8..].to_vec()),
            },
            Accessor { name: "checksum_valid", kind: ValueKind::Int, get: checksum_valid },
        ]
    }
}

// SPDX-License-Identifier: Apache-2.0

use super::{need, Accessor, Header, HeaderId, Packet, PacketError, SizeRule};
use crate::packet::checksum;
use crate::packet::ipv6::{Ipv6Hdr, PROTO_TCP};
use crate::value::{Value, ValueKind};

/// TCP header carried over IPv6. Options are kept as opaque bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TcpHdr {
    pub src_port: u16,
    pub dst_port: u16,
    pub seq: u32,
    pub ack: u32,
    /// Header length in 32-bit words.
    pub data_offset: u8,
    /// The three bits between data offset and NS; normally zero.
    pub reserved: u8,
    /// NS, CWR, ECE, URG, ACK, PSH, RST, SYN, FIN (9 bits).
    pub flags: u16,
    pub window: u16,
    pub checksum: u16,
    pub urgent_ptr: u16,
    pub options: Vec<u8>,
}

impl Default for TcpHdr {
    fn default() -> Self {
        TcpHdr {
            src_port: 0,
            dst_port: 0,
            seq: 0,
            ack: 0,
            data_offset: 5,
            reserved: 0,
            flags: 0,
            window: 0,
            checksum: 0,
            urgent_ptr: 0,
            options: Vec::new(),
        }
    }
}

impl TcpHdr {
    pub const MIN_SIZE: usize = 20;
    const CHECKSUM_AT: usize = 16;

    pub fn len(&self) -> usize {
        self.data_offset as usize * 4
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Computes the checksum this header should carry inside `ip` with the
    /// given segment data, ignoring the current checksum value.
    pub fn compute_checksum(&self, ip: &Ipv6Hdr, data: &[u8]) -> Result<u16, PacketError> {
        let mut seg = TcpHdr { checksum: 0, ..self.clone() }.encode()?;
        seg.extend_from_slice(data);
        let len = u32::try_from(seg.len()).map_err(|_| PacketError::Invariant {
            header: Self::ID,
            reason: "segment exceeds 32-bit length".into(),
        })?;
        Ok(checksum::pseudo_header_checksum(&ip.src, &ip.dst, len, PROTO_TCP, &seg)
            .expect("length computed from the segment itself"))
    }
}

fn measure(buf: &[u8]) -> Result<usize, PacketError> {
    need(HeaderId::TCP, buf, TcpHdr::MIN_SIZE)?;
    let words = buf[12] >> 4;
    if words < 5 {
        return Err(PacketError::Invariant {
            header: HeaderId::TCP,
            reason: format!("data offset {words} is below the 5-word minimum"),
        });
    }
    Ok(words as usize * 4)
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_be_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Pseudo-header checksum verification against the nearest preceding IPv6
/// header; 1 when the segment (header plus everything after it) verifies.
fn checksum_valid(p: &Packet, i: usize) -> Value {
    let Some(ip_idx) = p.chain()[..i].iter().rposition(|e| e.header == HeaderId::IPV6) else {
        return Value::Int(0);
    };
    let Ok((ip, _)) = Ipv6Hdr::decode(p.header_bytes(ip_idx)) else {
        return Value::Int(0);
    };
    let seg = p.bytes_from(i);
    let ok = checksum::pseudo_header_checksum(&ip.src, &ip.dst, seg.len() as u32, PROTO_TCP, seg) == Ok(0);
    Value::Int(ok.into())
}

impl Header for TcpHdr {
    const ID: HeaderId = HeaderId::TCP;
    const PREDECESSORS: &'static [HeaderId] = &[HeaderId::IPV6, HeaderId::SRV6];
    const PARAMETER: Option<HeaderId> = Some(HeaderId::IPV6);

    fn size_rule() -> SizeRule {
        SizeRule::Computed(measure)
    }

    fn decode(buf: &[u8]) -> Result<(Self, usize), PacketError> {
        let len = measure(buf)?;
        need(Self::ID, buf, len)?;
        let h = TcpHdr {
            src_port: u16_at(buf, 0),
            dst_port: u16_at(buf, 2),
            seq: u32_at(buf, 4),
            ack: u32_at(buf, 8),
            data_offset: buf[12] >> 4,
            reserved: (buf[12] >> 1) & 0x07,
            flags: (u16::from(buf[12] & 0x01) << 8) | u16::from(buf[13]),
            window: u16_at(buf, 14),
            checksum: u16_at(buf, Self::CHECKSUM_AT),
            urgent_ptr: u16_at(buf, 18),
            options: buf[Self::MIN_SIZE..len].to_vec(),
        };
        Ok((h, len))
    }

    fn encode(&self) -> Result<Vec<u8>, PacketError> {
        if self.data_offset < 5 || self.data_offset > 15 {
            return Err(PacketError::Invariant {
                header: Self::ID,
                reason: format!("data offset {} outside 5..=15", self.data_offset),
            });
        }
        if self.options.len() != self.len() - Self::MIN_SIZE {
            return Err(PacketError::Invariant {
                header: Self::ID,
                reason: format!(
                    "{} option bytes do not fill data offset {}",
                    self.options.len(),
                    self.data_offset
                ),
            });
        }
        if self.reserved > 0x07 || self.flags > 0x1ff {
            return Err(PacketError::Invariant { header: Self::ID, reason: "reserved or flag bits out of range".into() });
        }
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.src_port.to_be_bytes());
        out.extend_from_slice(&self.dst_port.to_be_bytes());
        out.extend_from_slice(&self.seq.to_be_bytes());
        out.extend_from_slice(&self.ack.to_be_bytes());
        out.push((self.data_offset << 4) | (self.reserved << 1) | (self.flags >> 8) as u8);
        out.push(self.flags as u8);
        out.extend_from_slice(&self.window.to_be_bytes());
        out.extend_from_slice(&self.checksum.to_be_bytes());
        out.extend_from_slice(&self.urgent_ptr.to_be_bytes());
        out.extend_from_slice(&self.options);
        Ok(out)
    }

    fn accessors() -> Vec<Accessor> {
        vec![
            Accessor { name: "src_port", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(u16_at(p.header_bytes(i), 0).into()) },
            Accessor { name: "dst_port", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(u16_at(p.header_bytes(i), 2).into()) },
            Accessor { name: "seq", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(u32_at(p.header_bytes(i), 4).into()) },
            Accessor { name: "ack", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(u32_at(p.header_bytes(i), 8).into()) },
            Accessor { name: "data_offset", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int((p.header_bytes(i)[12] >> 4).into()) },
            Accessor {
                name: "flags",
                kind: ValueKind::Int,
                get: |p: &Packet, i| {
                    let b = p.header_bytes(i);
                    Value::Int(((u16::from(b[12] & 1) << 8) | u16::from(b[13])).into())
                },
            },
            Accessor { name: "window", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(u16_at(p.header_bytes(i), 14).into()) },
            Accessor { name: "checksum", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(u16_at(p.header_bytes(i), 16).into()) },
            Accessor { name: "urgent_ptr", kind: ValueKind::Int, get: |p: &Packet, i| Value::Int(u16_at(p.header_bytes(i), 18).into()) },
            Accessor { name: "options", kind: ValueKind::Bytes, get: |p: &Packet, i| Value::Bytes(p.header_bytes(i)[20..].to_vec()) },
            Accessor { name: "checksum_valid", kind: ValueKind::Int, get: checksum_valid },
        ]
    }
}

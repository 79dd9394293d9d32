// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use super::{need, Accessor, Header, HeaderId, Packet, PacketError, SizeRule};
use crate::value::{Value, ValueKind};

pub const ETHERTYPE_IPV6: u16 = 0x86dd;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MacAddr(pub [u8; 6]);

impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d, e, g] = self.0;
        write!(f, "{a:02x}:{b:02x}:{c:02x}:{d:02x}:{e:02x}:{g:02x}")
    }
}

/// Ethernet II header.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EthHdr {
    pub dst: MacAddr,
    pub src: MacAddr,
    pub ether_type: u16,
}

impl EthHdr {
    pub const SIZE: usize = 14;

    pub fn swap_addresses(&mut self) {
        std::mem::swap(&mut self.src, &mut self.dst);
    }
}

fn mac_at(b: &[u8], at: usize) -> MacAddr {
    let mut m = [0u8; 6];
    m.copy_from_slice(&b[at..at + 6]);
    MacAddr(m)
}

impl Header for EthHdr {
    const ID: HeaderId = HeaderId::ETH;
    const PREDECESSORS: &'static [HeaderId] = &[];

    fn size_rule() -> SizeRule {
        SizeRule::Fixed(Self::SIZE)
    }

    fn decode(buf: &[u8]) -> Result<(Self, usize), PacketError> {
        need(Self::ID, buf, Self::SIZE)?;
        let h = EthHdr {
            dst: mac_at(buf, 0),
            src: mac_at(buf, 6),
            ether_type: u16::from_be_bytes([buf[12], buf[13]]),
        };
        Ok((h, Self::SIZE))
    }

    fn encode(&self) -> Result<Vec<u8>, PacketError> {
        let mut out = Vec::with_capacity(Self::SIZE);
        out.extend_from_slice(&self.dst.0);
        out.extend_from_slice(&self.src.0);
        out.extend_from_slice(&self.ether_type.to_be_bytes());
        Ok(out)
    }

    fn accessors() -> Vec<Accessor> {
        vec![
            Accessor { name: "dst", kind: ValueKind::Mac, get: |p: &Packet, i| Value::Mac(mac_at(p.header_bytes(i), 0)) },
            Accessor { name: "src", kind: ValueKind::Mac, get: |p: &Packet, i| Value::Mac(mac_at(p.header_bytes(i), 6)) },
            Accessor {
                name: "ether_type",
                kind: ValueKind::Int,
                get: |p: &Packet, i| {
                    let b = p.header_bytes(i);
                    Value::Int(u16::from_be_bytes([b[12], b[13]]).into())
                },
            },
        ]
    }

    fn next(this: &[u8], _rest: &[u8]) -> Option<HeaderId> {
        (u16::from_be_bytes([this[12], this[13]]) == ETHERTYPE_IPV6).then_some(HeaderId::IPV6)
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Seeded synthetic traffic.

use std::fmt;
use std::net::Ipv6Addr;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::pcap::Record;
use crate::packet::{
    EthHdr, Ipv6Hdr, MacAddr, PacketBuilder, Srv6RoutingHdr, TcpHdr, ETHERTYPE_IPV6, PROTO_NONE, PROTO_ROUTING,
    PROTO_TCP,
};

/// Base timestamp of generated captures, 2020-01-01T00:00:00Z.
pub const BASE_TS_SEC: u32 = 1_577_836_800;
/// Spacing between generated packets.
pub const GAP_USEC: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    /// Ethernet / IPv6 / TCP with data.
    Tcp6,
    /// Ethernet / IPv6 / SRv6 Routing header / raw payload.
    Srv6,
}

impl Template {
    /// Smallest IPv6 payload length the template can carry.
    pub fn min_payload_len(self) -> usize {
        match self {
            Template::Tcp6 => TcpHdr::MIN_SIZE,
            Template::Srv6 => Srv6RoutingHdr::BASE_SIZE + Srv6RoutingHdr::SEGMENT_SIZE,
        }
    }
}

impl FromStr for Template {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tcp6" => Ok(Template::Tcp6),
            "srv6" => Ok(Template::Srv6),
            other => Err(GeneratorError::UnknownTemplate(other.to_string())),
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Template::Tcp6 => "tcp6",
            Template::Srv6 => "srv6",
        })
    }
}

/// IPv6 payload length of generated packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadLen {
    Fixed(usize),
    /// Uniform over the inclusive range.
    Range(usize, usize),
}

impl PayloadLen {
    fn bounds(self) -> (usize, usize) {
        match self {
            PayloadLen::Fixed(n) => (n, n),
            PayloadLen::Range(a, b) => (a, b),
        }
    }
}

impl FromStr for PayloadLen {
    type Err = GeneratorError;

    /// `N` or `A..B` (inclusive).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GeneratorError::BadPayloadLen(s.to_string());
        match s.split_once("..") {
            Some((a, b)) => Ok(PayloadLen::Range(
                a.trim().parse().map_err(|_| bad())?,
                b.trim_start_matches('=').trim().parse().map_err(|_| bad())?,
            )),
            None => s.trim().parse().map(PayloadLen::Fixed).map_err(|_| bad()),
        }
    }
}

impl fmt::Display for PayloadLen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayloadLen::Fixed(n) => write!(f, "{n}"),
            PayloadLen::Range(a, b) => write!(f, "{a}..{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneratorError {
    #[error("unknown template {0:?} (expected tcp6 or srv6)")]
    UnknownTemplate(String),
    #[error("bad payload length {0:?} (expected N or A..B)")]
    BadPayloadLen(String),
    #[error("payload length range {0}..{1} is empty")]
    EmptyRange(usize, usize),
    #[error("{template} packets need an IPv6 payload of {min}..65535 bytes, got {got}")]
    OutOfBounds { template: Template, min: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub count: usize,
    pub template: Template,
    pub payload_len: PayloadLen,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        let (lo, hi) = self.payload_len.bounds();
        if lo > hi {
            return Err(GeneratorError::EmptyRange(lo, hi));
        }
        let min = self.template.min_payload_len();
        for got in [lo, hi] {
            if got < min || got > u16::MAX as usize {
                return Err(GeneratorError::OutOfBounds { template: self.template, min, got });
            }
        }
        Ok(())
    }
}

fn unicast_mac(rng: &mut ChaCha8Rng) -> MacAddr {
    let mut m: [u8; 6] = rng.gen();
    // Locally administered, unicast.
    m[0] = (m[0] & 0xfc) | 0x02;
    MacAddr(m)
}

fn addr(rng: &mut ChaCha8Rng) -> Ipv6Addr {
    let low: u64 = rng.gen();
    Ipv6Addr::from((0x2001_0db8u128 << 96) | u128::from(low))
}

fn bytes(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    let mut v = vec![0u8; n];
    rng.fill(&mut v[..]);
    v
}

fn base_headers(rng: &mut ChaCha8Rng, payload_len: usize, next_header: u8) -> (EthHdr, Ipv6Hdr) {
    let eth = EthHdr { dst: unicast_mac(rng), src: unicast_mac(rng), ether_type: ETHERTYPE_IPV6 };
    let ip = Ipv6Hdr {
        traffic_class: rng.gen(),
        flow_label: rng.gen_range(0..1 << 20),
        payload_len: payload_len as u16,
        next_header,
        hop_limit: rng.gen_range(1..=255),
        src: addr(rng),
        dst: addr(rng),
    };
    (eth, ip)
}

fn tcp6(rng: &mut ChaCha8Rng, payload_len: usize) -> Vec<u8> {
    let (eth, ip) = base_headers(rng, payload_len, PROTO_TCP);
    let max_words = (payload_len / 4).min(15);
    let data_offset = rng.gen_range(5..=max_words.min(8)) as u8;
    let mut tcp = TcpHdr {
        src_port: rng.gen_range(1024..=u16::MAX),
        dst_port: rng.gen_range(1..1024),
        seq: rng.gen(),
        ack: rng.gen(),
        data_offset,
        reserved: 0,
        flags: 0x010 | (rng.gen::<u16>() & 0x008),
        window: rng.gen(),
        checksum: 0,
        urgent_ptr: 0,
        options: bytes(rng, (data_offset as usize - 5) * 4),
    };
    let data = bytes(rng, payload_len - tcp.len());
    tcp.checksum = tcp.compute_checksum(&ip, &data).expect("generated segment fits");
    PacketBuilder::new()
        .push(&eth)
        .and_then(|b| b.push(&ip))
        .and_then(|b| b.push(&tcp))
        .expect("generated headers are well formed")
        .payload(&data)
        .into_bytes()
}

fn srv6(rng: &mut ChaCha8Rng, payload_len: usize) -> Vec<u8> {
    let (eth, ip) = base_headers(rng, payload_len, PROTO_ROUTING);
    let room = (payload_len - Srv6RoutingHdr::BASE_SIZE) / Srv6RoutingHdr::SEGMENT_SIZE;
    let n = rng.gen_range(1..=room.min(4));
    let segments = (0..n).map(|_| addr(rng)).collect();
    let mut srh = Srv6RoutingHdr::new(PROTO_NONE, rng.gen_range(0..=n as u8), segments);
    srh.tag = rng.gen();
    let data = bytes(rng, payload_len - srh.len());
    PacketBuilder::new()
        .push(&eth)
        .and_then(|b| b.push(&ip))
        .and_then(|b| b.push(&srh))
        .expect("generated headers are well formed")
        .payload(&data)
        .into_bytes()
}

/// Generates `spec.count` records. The same spec always yields the same bytes.
pub fn generate(spec: &GeneratorSpec) -> Result<Vec<Record>, GeneratorError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = spec.payload_len.bounds();
    Ok((0..spec.count)
        .map(|i| {
            let len = rng.gen_range(lo..=hi);
            let data = match spec.template {
                Template::Tcp6 => tcp6(&mut rng, len),
                Template::Srv6 => srv6(&mut rng, len),
            };
            let t = i as u64 * GAP_USEC;
            Record::new(BASE_TS_SEC + (t / 1_000_000) as u32, (t % 1_000_000) as u32, data)
        })
        .collect())
}

// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use std::net::Ipv6Addr;
use std::sync::Arc;

use netcontract::contract::BuildMode;
use netcontract::harness::{generate, GeneratorSpec, PayloadLen, Pipeline, Policy, Record, Template};
use netcontract::nf;
use netcontract::packet::{
    EthHdr, HeaderId, Icmpv6PktTooBig, Ipv6Hdr, MacAddr, Packet, PacketBuilder, Srv6RoutingHdr, TcpHdr,
    ETHERTYPE_IPV6, PROTO_TCP,
};
use netcontract::registry::HeaderRegistry;
use proptest::prelude::*;

pub fn registry() -> Arc<HeaderRegistry> {
    Arc::new(HeaderRegistry::standard())
}

pub fn pipeline(name: &str, mode: BuildMode, policy: Policy) -> Pipeline {
    let r = registry();
    Pipeline::new(nf::lookup(name, &r).unwrap(), r, mode, policy)
}

pub fn traffic(template: Template, payload_len: PayloadLen, count: usize, seed: u64) -> Vec<Record> {
    generate(&GeneratorSpec { count, template, payload_len, seed }).unwrap()
}

pub fn parsed(bytes: Vec<u8>) -> Packet {
    let mut p = Packet::from_bytes(bytes);
    HeaderRegistry::standard().parse_chain(&mut p, HeaderId::ETH).unwrap();
    p
}

pub fn be16(b: &[u8], at: usize) -> u16 {
    u16::from_be_bytes([b[at], b[at + 1]])
}

pub fn eth_hdr() -> impl Strategy<Value = EthHdr> {
    (any::<[u8; 6]>(), any::<[u8; 6]>(), any::<u16>())
        .prop_map(|(d, s, t)| EthHdr { dst: MacAddr(d), src: MacAddr(s), ether_type: t })
}

pub fn ipv6_hdr() -> impl Strategy<Value = Ipv6Hdr> {
    (any::<u8>(), 0u32..1 << 20, any::<u16>(), any::<u8>(), any::<u8>(), any::<u128>(), any::<u128>()).prop_map(
        |(tc, fl, pl, nh, hl, s, d)| Ipv6Hdr {
            traffic_class: tc,
            flow_label: fl,
            payload_len: pl,
            next_header: nh,
            hop_limit: hl,
            src: Ipv6Addr::from(s),
            dst: Ipv6Addr::from(d),
        },
    )
}

pub fn tcp_hdr() -> impl Strategy<Value = TcpHdr> {
    (5u8..=15)
        .prop_flat_map(|off| {
            (
                (any::<u16>(), any::<u16>(), any::<u32>(), any::<u32>()),
                (0u8..8, 0u16..512, any::<u16>(), any::<u16>(), any::<u16>()),
                prop::collection::vec(any::<u8>(), (off as usize - 5) * 4),
                Just(off),
            )
        })
        .prop_map(|((sp, dp, seq, ack), (reserved, flags, window, checksum, urgent_ptr), options, off)| TcpHdr {
            src_port: sp,
            dst_port: dp,
            seq,
            ack,
            data_offset: off,
            reserved,
            flags,
            window,
            checksum,
            urgent_ptr,
            options,
        })
}

pub fn srv6_hdr(max_segments: usize) -> impl Strategy<Value = Srv6RoutingHdr> {
    prop::collection::vec(any::<u128>(), 1..=max_segments)
        .prop_flat_map(|segs| {
            let n = segs.len() as u8;
            (Just(segs), any::<u8>(), 0..=n, any::<u8>(), any::<u16>())
        })
        .prop_map(|(segs, nh, sl, flags, tag)| {
            let mut h = Srv6RoutingHdr::new(nh, sl, segs.into_iter().map(Ipv6Addr::from).collect());
            h.flags = flags;
            h.tag = tag;
            h
        })
}

pub fn ptb() -> impl Strategy<Value = Icmpv6PktTooBig> {
    (any::<u16>(), any::<u32>(), prop::collection::vec(any::<u8>(), 0..300))
        .prop_map(|(checksum, mtu, invoking_packet)| Icmpv6PktTooBig { checksum, mtu, invoking_packet })
}

/// A well-formed Ethernet/IPv6/TCP packet with a valid checksum.
pub fn tcp_packet() -> impl Strategy<Value = Packet> {
    (eth_hdr(), ipv6_hdr(), tcp_hdr(), prop::collection::vec(any::<u8>(), 0..1500)).prop_map(
        |(mut eth, mut ip, mut tcp, data)| {
            eth.ether_type = ETHERTYPE_IPV6;
            ip.next_header = PROTO_TCP;
            ip.payload_len = (tcp.len() + data.len()) as u16;
            tcp.checksum = tcp.compute_checksum(&ip, &data).unwrap();
            PacketBuilder::new().push(&eth).unwrap().push(&ip).unwrap().push(&tcp).unwrap().payload(&data)
        },
    )
}

pub fn records() -> impl Strategy<Value = Vec<Record>> {
    prop::collection::vec(
        (any::<u32>(), 0u32..1_000_000, prop::collection::vec(any::<u8>(), 0..400), 0u32..100).prop_map(
            |(ts_sec, ts_usec, data, extra)| Record { ts_sec, ts_usec, orig_len: data.len() as u32 + extra, data },
        ),
        0..16,
    )
}

/// A catalog NF and a short generated stream for it.
pub fn stream() -> impl Strategy<Value = (&'static str, Vec<Record>)> {
    (prop::sample::select(nf::NAMES), any::<bool>(), 1usize..6, any::<u64>()).prop_map(|(name, srv6, count, seed)| {
        let (t, len) = if srv6 {
            (Template::Srv6, PayloadLen::Range(24, 400))
        } else {
            (Template::Tcp6, PayloadLen::Range(1200, 1500))
        };
        (name, traffic(t, len, count, seed))
    })
}

// SPDX-License-Identifier: Apache-2.0

//! Answers oversized TCP/IPv6 packets with an ICMPv6 Packet Too Big.

use crate::nf::Verdict;
use crate::packet::{
    EthHdr, HeaderId, Icmpv6PktTooBig, Ipv6Hdr, Packet, PacketBuilder, PacketError, IPV6_MIN_MTU, PROTO_ICMPV6,
};

/// Bytes of the reply's IPv6 payload: the minimum MTU less the IPv6 header.
pub const REPLY_PAYLOAD_LEN: usize = IPV6_MIN_MTU as usize - Ipv6Hdr::SIZE;

pub const CONTRACT: &str = "\
#[check(IPV6_MIN_MTU = 1280, ETH_HDR_SIZE = 14, IPV6_HDR_SIZE = 40)]
pre {
    input: pkt,
    order: [EthHdr=>Ipv6Hdr=>TcpHdr<Ipv6Hdr>],
    checks: [(payload_len[Ipv6Hdr], >, IPV6_MIN_MTU)]
}
post {
    input: pkt,
    order: [EthHdr=>Ipv6Hdr=>Icmpv6PktTooBig<Ipv6Hdr>],
    checks: [(checksum[Icmpv6PktTooBig], neq, checksum[TcpHdr<Ipv6Hdr>]),
             (payload_len[Ipv6Hdr], ==, 1240),
             (src[Ipv6Hdr], ==, dst[Ipv6Hdr]),
             (dst[Ipv6Hdr], ==, src[Ipv6Hdr]),
             (.src[EthHdr], ==, .dst[EthHdr]),
             (.dst[EthHdr], ==, .src[EthHdr]),
             (mtu[Icmpv6PktTooBig], ==, IPV6_MIN_MTU),
             (checksum_valid[Icmpv6PktTooBig], ==, 1)]
}
static: [IPV6_MIN_MTU + ETH_HDR_SIZE == 1294,
         IPV6_MIN_MTU - IPV6_HDR_SIZE == 1240]
";

/// Switches for the rewrite; turning one off yields a known-bad variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TooBigOptions {
    pub swap_eth: bool,
    pub swap_ipv6: bool,
}

impl Default for TooBigOptions {
    fn default() -> Self {
        TooBigOptions { swap_eth: true, swap_ipv6: true }
    }
}

/// True when the parsed chain is exactly Ethernet, IPv6, TCP and the IPv6
/// payload exceeds the minimum MTU.
pub fn is_oversized_tcp(packet: &Packet) -> bool {
    let ids: Vec<_> = packet.chain().iter().map(|e| e.header).collect();
    if ids != [HeaderId::ETH, HeaderId::IPV6, HeaderId::TCP] {
        return false;
    }
    packet.header::<Ipv6Hdr>(0).is_ok_and(|ip| u32::from(ip.payload_len) > IPV6_MIN_MTU)
}

/// Builds the Packet Too Big reply for `packet`. The invoking packet is the
/// original IPv6 packet cut so that the reply's payload is exactly
/// [`REPLY_PAYLOAD_LEN`] bytes (or all of it, if shorter).
pub fn reply(packet: &Packet, opts: TooBigOptions) -> Result<Packet, PacketError> {
    let mut eth = packet.header::<EthHdr>(0)?;
    let mut ip = packet.header::<Ipv6Hdr>(0)?;
    let ip_at = packet.chain()[packet.position(HeaderId::IPV6, 0).expect("decoded above")].offset;
    let original = &packet.bytes()[ip_at..];
    let keep = original.len().min(REPLY_PAYLOAD_LEN - Icmpv6PktTooBig::FIXED_SIZE);

    if opts.swap_eth {
        eth.swap_addresses();
    }
    if opts.swap_ipv6 {
        ip.swap_addresses();
    }
    ip.next_header = PROTO_ICMPV6;
    ip.payload_len = (Icmpv6PktTooBig::FIXED_SIZE + keep) as u16;
    let mut icmp = Icmpv6PktTooBig { checksum: 0, mtu: IPV6_MIN_MTU, invoking_packet: original[..keep].to_vec() };
    icmp.checksum = icmp.compute_checksum(&ip)?;
    Ok(PacketBuilder::new().push(&eth)?.push(&ip)?.push(&icmp)?.build())
}

/// The NF body: rewrite oversized TCP packets, pass everything else through.
pub fn send_too_big(packet: Packet, opts: TooBigOptions) -> Verdict {
    if !is_oversized_tcp(&packet) {
        return Verdict::Emit(packet);
    }
    match reply(&packet, opts) {
        Ok(p) => Verdict::Emit(p),
        Err(e) => Verdict::Drop(format!("cannot build Packet Too Big: {e}")),
    }
}

#[cfg(test)]
mod tests {
    use std::net::Ipv6Addr;

    use super::*;
    use crate::packet::{MacAddr, TcpHdr, ETHERTYPE_IPV6, PROTO_TCP};
    use crate::registry::HeaderRegistry;

    fn tcp_packet(payload_len: u16) -> Packet {
        let eth = EthHdr { dst: MacAddr([0xb; 6]), src: MacAddr([0xa; 6]), ether_type: ETHERTYPE_IPV6 };
        let ip = Ipv6Hdr {
            payload_len,
            next_header: PROTO_TCP,
            src: "2001:db8::5".parse().unwrap(),
            dst: "2001:db8::d".parse().unwrap(),
            ..Default::default()
        };
        let data = vec![0x5a; payload_len as usize - TcpHdr::MIN_SIZE];
        let mut tcp = TcpHdr { src_port: 80, dst_port: 4000, seq: 1, ..Default::default() };
        tcp.checksum = tcp.compute_checksum(&ip, &data).unwrap();
        let mut p = PacketBuilder::new().push(&eth).unwrap().push(&ip).unwrap().push(&tcp).unwrap().payload(&data);
        HeaderRegistry::standard().parse_chain(&mut p, HeaderId::ETH).unwrap();
        p
    }

    #[test]
    fn rewrites_oversized() {
        let input = tcp_packet(1300);
        let Verdict::Emit(out) = send_too_big(input.clone(), TooBigOptions::default()) else { panic!() };
        let eth = out.header::<EthHdr>(0).unwrap();
        let ip = out.header::<Ipv6Hdr>(0).unwrap();
        let icmp = out.header::<Icmpv6PktTooBig>(0).unwrap();
        assert_eq!(eth.src, MacAddr([0xb; 6]));
        assert_eq!(eth.dst, MacAddr([0xa; 6]));
        assert_eq!(ip.src, "2001:db8::d".parse::<Ipv6Addr>().unwrap());
        assert_eq!(ip.payload_len, 1240);
        assert_eq!(out.len(), 14 + 1280);
        assert_eq!(icmp.mtu, 1280);
        assert_eq!(icmp.invoking_packet[..], input.bytes()[14..14 + 1232]);
        assert_ne!(icmp.checksum, input.header::<TcpHdr>(0).unwrap().checksum);
        assert_eq!(icmp.compute_checksum(&ip).unwrap(), icmp.checksum);
    }

    #[test]
    fn boundary_passes_through() {
        let input = tcp_packet(1280);
        assert_eq!(send_too_big(input.clone(), TooBigOptions::default()), Verdict::Emit(input));
    }

    #[test]
    fn deterministic() {
        let a = send_too_big(tcp_packet(1400), TooBigOptions::default());
        let b = send_too_big(tcp_packet(1400), TooBigOptions::default());
        assert_eq!(a, b);
    }
}

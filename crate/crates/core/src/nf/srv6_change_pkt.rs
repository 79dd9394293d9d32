// SPDX-License-Identifier: Apache-2.0

//! Inserts a segment into the SRv6 Routing header and keeps the dependent
//! length and index fields in step.

use std::net::Ipv6Addr;

use crate::nf::Verdict;
use crate::packet::{HeaderId, Ipv6Hdr, Packet, PacketError, Srv6RoutingHdr};

/// Segment appended when none is configured.
pub const DEFAULT_SEGMENT: Ipv6Addr = Ipv6Addr::new(0xfc00, 0, 0, 0, 0, 0, 0, 0x5e6);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AddSegmentOptions {
    pub segment: Ipv6Addr,
    /// Also bump Segments Left so the new segment is still to be visited.
    pub visit_new: bool,
    /// Off only in the deliberately broken variant.
    pub update_payload_len: bool,
}

impl Default for AddSegmentOptions {
    fn default() -> Self {
        AddSegmentOptions { segment: DEFAULT_SEGMENT, visit_new: false, update_payload_len: true }
    }
}

/// Contract text; `visit_new` selects the expected Segments Left delta.
pub fn contract_text(visit_new: bool) -> String {
    let sl = if visit_new { " + 1" } else { "" };
    format!(
        "\
#[check(SEGMENT_SIZE = 16, SEGMENT_UNITS = 2)]
pre {{
    input: pkt,
    order: [EthHdr=>Ipv6Hdr=>Srv6RoutingHdr],
    checks: [(payload_len[Ipv6Hdr], ==, trailing_len[Ipv6Hdr]),
             (segment_count[Srv6RoutingHdr], ==, last_entry[Srv6RoutingHdr] + 1),
             (segments_left[Srv6RoutingHdr], <=, segment_count[Srv6RoutingHdr])]
}}
post {{
    input: pkt,
    order: [EthHdr=>Ipv6Hdr=>Srv6RoutingHdr],
    checks: [(payload_len[Ipv6Hdr], ==, payload_len[Ipv6Hdr] + SEGMENT_SIZE),
             (hdr_ext_len[Srv6RoutingHdr], ==, hdr_ext_len[Srv6RoutingHdr] + SEGMENT_UNITS),
             (last_entry[Srv6RoutingHdr], ==, last_entry[Srv6RoutingHdr] + 1),
             (segments_left[Srv6RoutingHdr], ==, segments_left[Srv6RoutingHdr]{sl}),
             (segment_count[Srv6RoutingHdr], ==, segment_count[Srv6RoutingHdr] + 1),
             (src[Ipv6Hdr], ==, src[Ipv6Hdr]),
             (dst[Ipv6Hdr], ==, dst[Ipv6Hdr])]
}}
static: [SEGMENT_SIZE == 8 * SEGMENT_UNITS]
"
    )
}

fn rewrite(packet: &mut Packet, opts: AddSegmentOptions) -> Result<(), String> {
    let ids: Vec<_> = packet.chain().iter().take(3).map(|e| e.header).collect();
    if ids != [HeaderId::ETH, HeaderId::IPV6, HeaderId::SRV6] {
        return Err("not an Ethernet/IPv6/SRv6 packet".into());
    }
    let describe = |e: PacketError| e.to_string();
    let mut ip = packet.header::<Ipv6Hdr>(0).map_err(describe)?;
    let mut srh = packet.header::<Srv6RoutingHdr>(0).map_err(describe)?;
    srh.push_segment(opts.segment).map_err(describe)?;
    if opts.visit_new {
        srh.segments_left += 1;
    }
    if opts.update_payload_len {
        ip.payload_len = ip
            .payload_len
            .checked_add(Srv6RoutingHdr::SEGMENT_SIZE as u16)
            .ok_or("payload length would exceed 65535")?;
    }
    packet.set_header(0, &srh).map_err(describe)?;
    packet.set_header(0, &ip).map_err(describe)
}

/// The NF body. Packets without a routing header, or whose segment list is
/// full, are dropped with the reason.
pub fn add_segment(mut packet: Packet, opts: AddSegmentOptions) -> Verdict {
    match rewrite(&mut packet, opts) {
        Ok(()) => Verdict::Emit(packet),
        Err(reason) => Verdict::Drop(reason),
    }
}

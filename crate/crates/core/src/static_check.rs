// SPDX-License-Identifier: Apache-2.0

//! Build-time checks for code that names its headers and constants directly.
//!
//! [`assert_header_order!`] evaluates the predecessor rules of concrete
//! [`Header`](crate::packet::Header) types in a `const` item, so a bad order
//! stops compilation:
//!
//! ```
//! use netcontract::assert_header_order;
//! use netcontract::packet::{EthHdr, Ipv6Hdr, TcpHdr};
//!
//! assert_header_order!(EthHdr => Ipv6Hdr => TcpHdr);
//! ```
//!
//! ```compile_fail
//! use netcontract::assert_header_order;
//! use netcontract::packet::{EthHdr, Icmpv6PktTooBig, Ipv6Hdr};
//!
//! assert_header_order!(EthHdr => Ipv6Hdr => Icmpv6PktTooBig => Ipv6Hdr);
//! ```
//!
//! [`const_check!`] does the same for plain constant expressions:
//!
//! ```compile_fail
//! use netcontract::const_check;
//!
//! const MAX_PCKT_SIZE: u32 = 1400;
//! const ETH_HDR_SIZE: u32 = 14;
//! const_check!(MAX_PCKT_SIZE - ETH_HDR_SIZE == 1486);
//! ```

use crate::packet::HeaderId;

const fn str_eq(a: &str, b: &str) -> bool {
    let (a, b) = (a.as_bytes(), b.as_bytes());
    if a.len() != b.len() {
        return false;
    }
    let mut i = 0;
    while i < a.len() {
        if a[i] != b[i] {
            return false;
        }
        i += 1;
    }
    true
}

/// Whether `prev` is among `predecessors`; usable in const context.
pub const fn may_follow(predecessors: &[HeaderId], prev: HeaderId) -> bool {
    let mut i = 0;
    while i < predecessors.len() {
        if str_eq(predecessors[i].0, prev.0) {
            return true;
        }
        i += 1;
    }
    false
}

/// Fails compilation unless the listed header types form a valid chain.
#[macro_export]
macro_rules! assert_header_order {
    ($first:ty $(=> $rest:ty)*) => {
        const _: () = {
            assert!(
                <$first as $crate::packet::Header>::PREDECESSORS.is_empty(),
                concat!(stringify!($first), " cannot start a header chain")
            );
            $crate::assert_header_order!(@pairs $first $(, $rest)*);
        };
    };
    (@pairs $a:ty, $b:ty $(, $tail:ty)*) => {
        assert!(
            $crate::static_check::may_follow(
                <$b as $crate::packet::Header>::PREDECESSORS,
                <$a as $crate::packet::Header>::ID,
            ),
            concat!(stringify!($b), " may not follow ", stringify!($a))
        );
        $crate::assert_header_order!(@pairs $b $(, $tail)*);
    };
    (@pairs $a:ty) => {};
}

/// Compile-time assertion over constant expressions.
#[macro_export]
macro_rules! const_check {
    ($e:expr) => {
        const _: () = assert!($e, concat!("static assertion failed: ", stringify!($e)));
    };
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::{EthHdr, Header, Ipv6Hdr, Srv6RoutingHdr, TcpHdr};

    crate::assert_header_order!(EthHdr => Ipv6Hdr => Srv6RoutingHdr => Srv6RoutingHdr => TcpHdr);
    const IPV6_MIN_MTU: usize = 1280;
    crate::const_check!(IPV6_MIN_MTU + 14 == 1294);

    #[test]
    fn runtime_use_agrees() {
        assert!(may_follow(Ipv6Hdr::PREDECESSORS, EthHdr::ID));
        assert!(!may_follow(Ipv6Hdr::PREDECESSORS, TcpHdr::ID));
    }
}

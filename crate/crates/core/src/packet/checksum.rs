// SPDX-License-Identifier: Apache-2.0

//! Internet checksum (RFC 1071) and the IPv6 upper-layer pseudo-header
//! variant used by TCP and ICMPv6.

use std::net::Ipv6Addr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChecksumError {
    #[error("upper-layer length {declared} does not match {actual} supplied bytes")]
    LengthMismatch { declared: u32, actual: usize },
}

/// Adds `data` as big-endian 16-bit words onto a running sum. A trailing odd
/// byte is padded with zero on the right.
pub fn accumulate(data: &[u8], initial: u64) -> u64 {
    let mut sum = initial;
    let mut words = data.chunks_exact(2);
    for w in &mut words {
        sum += u64::from(u16::from_be_bytes([w[0], w[1]]));
    }
    if let [last] = words.remainder() {
        sum += u64::from(*last) << 8;
    }
    sum
}

/// Folds the carries back into 16 bits and complements.
pub fn finish(mut sum: u64) -> u16 {
    while sum >> 16 != 0 {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}

/// One's complement of the one's complement sum of `data`.
pub fn internet_checksum(data: &[u8]) -> u16 {
    finish(accumulate(data, 0))
}

/// Running sum of the 40-byte IPv6 pseudo-header.
pub fn pseudo_header_sum(src: &Ipv6Addr, dst: &Ipv6Addr, upper_len: u32, next_header: u8) -> u64 {
    let mut sum = accumulate(&src.octets(), 0);
    sum = accumulate(&dst.octets(), sum);
    sum = accumulate(&upper_len.to_be_bytes(), sum);
    accumulate(&[0, 0, 0, next_header], sum)
}

/// Checksum over the IPv6 pseudo-header followed by `upper`. The checksum
/// field inside `upper` must already be zeroed when computing a fresh value;
/// leaving it in place yields 0 for a correct packet.
pub fn pseudo_header_checksum(
    src: &Ipv6Addr,
    dst: &Ipv6Addr,
    upper_len: u32,
    next_header: u8,
    upper: &[u8],
) -> Result<u16, ChecksumError> {
    if upper_len as usize != upper.len() {
        return Err(ChecksumError::LengthMismatch { declared: upper_len, actual: upper.len() });
    }
    Ok(finish(accumulate(upper, pseudo_header_sum(src, dst, upper_len, next_header))))
}

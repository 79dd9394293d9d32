// SPDX-License-Identifier: Apache-2.0

//! Classic libpcap files: microsecond timestamps, Ethernet link type.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

pub const MAGIC: u32 = 0xA1B2_C3D4;
pub const VERSION_MAJOR: u16 = 2;
pub const VERSION_MINOR: u16 = 4;
pub const LINKTYPE_ETHERNET: u32 = 1;
pub const SNAPLEN: u32 = 65_535;

const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Record {
    pub ts_sec: u32,
    pub ts_usec: u32,
    /// Length of the packet on the wire; at least `data.len()`.
    pub orig_len: u32,
    pub data: Vec<u8>,
}

impl Record {
    pub fn new(ts_sec: u32, ts_usec: u32, data: Vec<u8>) -> Self {
        Record { ts_sec, ts_usec, orig_len: data.len() as u32, data }
    }
}

#[derive(Debug, Error)]
pub enum PcapError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic number {0:#010x}")]
    BadMagic(u32),
    #[error("unsupported link type {0} (only Ethernet is supported)")]
    UnsupportedLinkType(u32),
    #[error("truncated {what} at byte {offset}")]
    Truncated { what: &'static str, offset: usize },
    #[error("record {index} captures {len} bytes, more than {limit}")]
    Oversized { index: usize, len: usize, limit: usize },
}

/// Writes a little-endian pcap stream.
pub fn write_pcap<W: Write>(mut w: W, records: &[Record]) -> Result<(), PcapError> {
    let mut hdr = Vec::with_capacity(GLOBAL_HEADER_LEN);
    hdr.extend_from_slice(&MAGIC.to_le_bytes());
    hdr.extend_from_slice(&VERSION_MAJOR.to_le_bytes());
    hdr.extend_from_slice(&VERSION_MINOR.to_le_bytes());
    hdr.extend_from_slice(&0i32.to_le_bytes());
    hdr.extend_from_slice(&0u32.to_le_bytes());
    hdr.extend_from_slice(&SNAPLEN.to_le_bytes());
    hdr.extend_from_slice(&LINKTYPE_ETHERNET.to_le_bytes());
    w.write_all(&hdr)?;
    for (index, r) in records.iter().enumerate() {
        if r.data.len() > SNAPLEN as usize {
            return Err(PcapError::Oversized { index, len: r.data.len(), limit: SNAPLEN as usize });
        }
        w.write_all(&r.ts_sec.to_le_bytes())?;
        w.write_all(&r.ts_usec.to_le_bytes())?;
        w.write_all(&(r.data.len() as u32).to_le_bytes())?;
        w.write_all(&r.orig_len.max(r.data.len() as u32).to_le_bytes())?;
        w.write_all(&r.data)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a pcap stream in either byte order.
pub fn read_pcap<R: Read>(mut r: R) -> Result<Vec<Record>, PcapError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    parse_pcap(&buf)
}

pub fn parse_pcap(buf: &[u8]) -> Result<Vec<Record>, PcapError> {
    let global = buf.get(..GLOBAL_HEADER_LEN).ok_or(PcapError::Truncated { what: "global header", offset: 0 })?;
    let raw_magic = u32::from_le_bytes(global[..4].try_into().expect("4 bytes"));
    let u32_at: fn(&[u8], usize) -> u32 = match raw_magic {
        MAGIC => |b, at| u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes")),
        m if m == MAGIC.swap_bytes() => |b, at| u32::from_be_bytes(b[at..at + 4].try_into().expect("4 bytes")),
        other => return Err(PcapError::BadMagic(other)),
    };
    let linktype = u32_at(global, 20);
    if linktype != LINKTYPE_ETHERNET {
        return Err(PcapError::UnsupportedLinkType(linktype));
    }
    let mut records = Vec::new();
    let mut at = GLOBAL_HEADER_LEN;
    while at < buf.len() {
        let h = buf
            .get(at..at + RECORD_HEADER_LEN)
            .ok_or(PcapError::Truncated { what: "record header", offset: at })?;
        let incl = u32_at(h, 8) as usize;
        let start = at + RECORD_HEADER_LEN;
        let data = buf
            .get(start..start + incl)
            .ok_or(PcapError::Truncated { what: "record data", offset: start })?;
        records.push(Record { ts_sec: u32_at(h, 0), ts_usec: u32_at(h, 4), orig_len: u32_at(h, 12), data: data.to_vec() });
        at = start + incl;
    }
    Ok(records)
}

pub fn read_file(path: &Path) -> Result<Vec<Record>, PcapError> {
    read_pcap(BufReader::new(File::open(path)?))
}

pub fn write_file(path: &Path, records: &[Record]) -> Result<(), PcapError> {
    write_pcap(BufWriter::new(File::create(path)?), records)
}

// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use super::{FieldRef, ResolveError};
use crate::packet::{HeaderId, Packet};
use crate::registry::{ChainMismatch, HeaderRegistry, OrderSpec};
use crate::value::Value;

/// Materialized view of one header as it entered the NF.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotEntry {
    pub values: HashMap<&'static str, Value>,
    pub raw: Vec<u8>,
}

/// Mirror of the headers of an incoming packet, keyed by
/// `(header type, occurrence)`. Immutable once captured.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngressSnapshot {
    entries: HashMap<(HeaderId, usize), SnapshotEntry>,
    chain: Vec<(HeaderId, usize)>,
}

impl IngressSnapshot {
    /// Copies `packet`, re-parses the copy header by header along `spec` and
    /// evaluates every accessor of every header.
    pub fn capture(packet: &Packet, spec: &OrderSpec, registry: &HeaderRegistry) -> Result<Self, ChainMismatch> {
        registry.match_chain(packet, spec)?;
        let mut mirror = Packet::from_bytes(packet.bytes().to_vec());
        registry
            .parse_order(&mut mirror, spec)
            .expect("packet already parsed along this order");
        let mut entries = HashMap::with_capacity(mirror.chain().len());
        let mut chain = Vec::with_capacity(mirror.chain().len());
        for (i, e) in mirror.chain().iter().enumerate() {
            let d = registry.get(e.header).expect("parsed header is registered");
            let values = d.accessors.iter().map(|a| (a.name, (a.get)(&mirror, i))).collect();
            entries.insert((e.header, e.occurrence), SnapshotEntry { values, raw: mirror.header_bytes(i).to_vec() });
            chain.push((e.header, e.occurrence));
        }
        Ok(IngressSnapshot { entries, chain })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, header: HeaderId, occurrence: usize) -> Option<&SnapshotEntry> {
        self.entries.get(&(header, occurrence))
    }

    /// Keys in chain order.
    pub fn keys(&self) -> &[(HeaderId, usize)] {
        &self.chain
    }

    pub(super) fn resolve(&self, f: &FieldRef) -> Result<Value, ResolveError> {
        let key = (f.header.header, f.occurrence);
        let entry = self.entries.get(&key).ok_or_else(|| ResolveError::NotInSnapshot(f.to_string()))?;
        if let Some(param) = f.header.param {
            let pos = self.chain.iter().position(|k| *k == key).expect("entry is in chain");
            if !self.chain[..pos].iter().any(|(h, _)| *h == param) {
                return Err(ResolveError::MissingParameter { field: f.to_string(), param });
            }
        }
        entry.values.get(f.accessor.as_str()).cloned().ok_or_else(|| ResolveError::UnknownAccessor {
            header: f.header.header,
            accessor: f.accessor.clone(),
        })
    }
}

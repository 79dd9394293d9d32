// SPDX-License-Identifier: Apache-2.0

//! Network functions and the catalog of built-in ones.
//!
//! An NF is a transform from packet to verdict plus an optional contract.
//! The transform never sees the ingress snapshot, so running with contracts
//! off cannot change what it emits.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::contract::Contract;
use crate::elaborate::{compile, ElaborationError};
use crate::packet::Packet;
use crate::registry::HeaderRegistry;

pub mod mtu_too_big;
pub mod srv6_change_pkt;

/// What a transform decided for one packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Emit(Packet),
    Drop(String),
}

/// How the pipeline treats a packet that fails the ingress contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngressFailure {
    /// The NF only handles packets its ingress contract describes; others
    /// leave untouched, unreported, and skip the egress contract.
    PassThrough,
    /// Failures are violations and go through the configured policy.
    Report,
}

pub type Transform = Arc<dyn Fn(Packet) -> Verdict + Send + Sync>;

#[derive(Clone)]
pub struct NfDefinition {
    pub name: String,
    /// `None` runs the transform with no checking at all.
    pub contract: Option<Arc<Contract>>,
    pub transform: Transform,
    pub ingress_failure: IngressFailure,
}

impl fmt::Debug for NfDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NfDefinition")
            .field("name", &self.name)
            .field("contract", &self.contract.is_some())
            .field("ingress_failure", &self.ingress_failure)
            .finish()
    }
}

impl NfDefinition {
    pub fn new(name: &str, transform: Transform, ingress_failure: IngressFailure) -> Self {
        NfDefinition { name: name.to_string(), contract: None, transform, ingress_failure }
    }

    pub fn with_contract(mut self, contract: Contract) -> Self {
        self.contract = Some(Arc::new(contract));
        self
    }

    /// Elaborates `text` and attaches the result in place of the current contract.
    pub fn with_contract_text(self, text: &str, registry: &HeaderRegistry) -> Result<Self, ElaborationError> {
        let c = compile(text, &self.name, registry)?;
        Ok(self.with_contract(c))
    }

    pub fn apply(&self, packet: Packet) -> Verdict {
        (self.transform)(packet)
    }
}

#[derive(Debug, Error)]
pub enum NfError {
    #[error("unknown network function {0:?} (known: {known})", known = NAMES.join(", "))]
    Unknown(String),
    #[error("contract of {nf} does not elaborate: {source}")]
    Elaboration { nf: String, source: ElaborationError },
}

/// Names accepted by [`lookup`]. Entries with a `:` suffix are deliberately
/// broken variants used to show that the contracts catch the bug.
pub const NAMES: &[&str] = &[
    "mtu-too-big",
    "mtu-too-big:no-ipv6-swap",
    "mtu-too-big:no-eth-swap",
    "srv6-change-pkt",
    "srv6-change-pkt:visit-new",
    "srv6-change-pkt:no-payload-len",
];

/// Contract source text for a catalog entry.
pub fn contract_text(name: &str) -> Option<String> {
    match name {
        "mtu-too-big" | "mtu-too-big:no-ipv6-swap" | "mtu-too-big:no-eth-swap" => {
            Some(mtu_too_big::CONTRACT.to_string())
        }
        "srv6-change-pkt" | "srv6-change-pkt:no-payload-len" => Some(srv6_change_pkt::contract_text(false)),
        "srv6-change-pkt:visit-new" => Some(srv6_change_pkt::contract_text(true)),
        _ => None,
    }
}

fn transform(name: &str) -> Option<(Transform, IngressFailure)> {
    use mtu_too_big::TooBigOptions;
    use srv6_change_pkt::AddSegmentOptions;
    let too_big = |o: TooBigOptions| -> Transform { Arc::new(move |p| mtu_too_big::send_too_big(p, o)) };
    let add = |o: AddSegmentOptions| -> Transform { Arc::new(move |p| srv6_change_pkt::add_segment(p, o)) };
    let base = AddSegmentOptions::default();
    Some(match name {
        "mtu-too-big" => (too_big(TooBigOptions::default()), IngressFailure::PassThrough),
        "mtu-too-big:no-ipv6-swap" => {
            (too_big(TooBigOptions { swap_ipv6: false, ..Default::default() }), IngressFailure::PassThrough)
        }
        "mtu-too-big:no-eth-swap" => {
            (too_big(TooBigOptions { swap_eth: false, ..Default::default() }), IngressFailure::PassThrough)
        }
        "srv6-change-pkt" => (add(base), IngressFailure::Report),
        "srv6-change-pkt:visit-new" => (add(AddSegmentOptions { visit_new: true, ..base }), IngressFailure::Report),
        "srv6-change-pkt:no-payload-len" => {
            (add(AddSegmentOptions { update_payload_len: false, ..base }), IngressFailure::Report)
        }
        _ => return None,
    })
}

/// Builds a catalog NF with its contract elaborated against `registry`.
pub fn lookup(name: &str, registry: &HeaderRegistry) -> Result<NfDefinition, NfError> {
    let (t, failure) = transform(name).ok_or_else(|| NfError::Unknown(name.to_string()))?;
    let nf = NfDefinition::new(name, t, failure);
    let text = contract_text(name).expect("every catalog entry has a contract");
    nf.with_contract_text(&text, registry)
        .map_err(|source| NfError::Elaboration { nf: name.to_string(), source })
}

/// Builds a catalog NF's transform with no contract attached.
pub fn lookup_uncontracted(name: &str) -> Result<NfDefinition, NfError> {
    let (t, failure) = transform(name).ok_or_else(|| NfError::Unknown(name.to_string()))?;
    Ok(NfDefinition::new(name, t, failure))
}

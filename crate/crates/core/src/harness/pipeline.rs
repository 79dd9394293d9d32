// SPDX-License-Identifier: Apache-2.0

//! Runs packets through one NF: ingress contract, transform, egress contract.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use super::pcap::Record;
use crate::contract::{BuildMode, ContractEngine, Violation};
use crate::nf::{IngressFailure, NfDefinition, Verdict};
use crate::packet::{HeaderId, Packet};
use crate::registry::HeaderRegistry;

/// What happens to a packet that violated its contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Policy {
    /// Report and do not emit it.
    #[default]
    Drop,
    /// Report and emit it anyway.
    Continue,
    /// Report, do not emit it, and stop the run.
    Abort,
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "drop" => Ok(Policy::Drop),
            "continue" => Ok(Policy::Continue),
            "abort" => Ok(Policy::Abort),
            other => Err(format!("unknown policy {other:?}")),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Drop => "drop",
            Policy::Continue => "continue",
            Policy::Abort => "abort",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Timings {
    pub ingress_contract_ns: u64,
    pub transform_ns: u64,
    pub egress_contract_ns: u64,
}

impl Timings {
    fn add(&mut self, o: &Timings) {
        self.ingress_contract_ns += o.ingress_contract_ns;
        self.transform_ns += o.transform_ns;
        self.egress_contract_ns += o.egress_contract_ns;
    }

    pub fn total_ns(&self) -> u64 {
        self.ingress_contract_ns + self.transform_ns + self.egress_contract_ns
    }
}

/// A packet the NF itself refused.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DropRecord {
    pub packet_index: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub nf: String,
    pub mode: String,
    pub packets_in: u64,
    pub packets_out: u64,
    pub packets_dropped: u64,
    /// Packets outside the NF's ingress contract, forwarded untouched.
    pub packets_passed_through: u64,
    pub violations: Vec<Violation>,
    pub violations_by_check: BTreeMap<String, u64>,
    pub nf_drops: Vec<DropRecord>,
    pub aborted: bool,
    pub timings: Timings,
}

impl Summary {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("summary serializes")
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        for v in &self.violations {
            s.push_str(&v.message);
            s.push('\n');
        }
        for d in &self.nf_drops {
            s.push_str(&format!("NF {} dropped packet {}: {}\n", self.nf, d.packet_index, d.reason));
        }
        s.push_str(&format!(
            "nf={} mode={} in={} out={} dropped={} passed_through={} violations={}{}\n",
            self.nf,
            self.mode,
            self.packets_in,
            self.packets_out,
            self.packets_dropped,
            self.packets_passed_through,
            self.violations.len(),
            if self.aborted { " aborted" } else { "" }
        ));
        for (k, n) in &self.violations_by_check {
            s.push_str(&format!("  {n:>8}  {k}\n"));
        }
        s.push_str(&format!(
            "timings: ingress_contract={}ns transform={}ns egress_contract={}ns\n",
            self.timings.ingress_contract_ns, self.timings.transform_ns, self.timings.egress_contract_ns
        ));
        s
    }
}

/// Result of one packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketOutcome {
    /// Bytes to emit, if any.
    pub output: Option<Vec<u8>>,
    pub violations: Vec<Violation>,
    pub nf_drop: Option<String>,
    pub passed_through: bool,
    pub abort: bool,
    pub timings: Timings,
}

pub struct Pipeline {
    engine: ContractEngine,
    nf: NfDefinition,
    policy: Policy,
}

fn parsed(bytes: Vec<u8>, registry: &HeaderRegistry) -> Packet {
    let mut p = Packet::from_bytes(bytes);
    // A header that fails to parse ends the chain; order matching reports it.
    let _ = registry.parse_chain(&mut p, HeaderId::ETH);
    p
}

fn elapsed(t: Instant) -> u64 {
    t.elapsed().as_nanos() as u64
}

impl Pipeline {
    pub fn new(nf: NfDefinition, registry: Arc<HeaderRegistry>, mode: BuildMode, policy: Policy) -> Self {
        Pipeline { engine: ContractEngine::new(registry, mode), nf, policy }
    }

    pub fn engine(&self) -> &ContractEngine {
        &self.engine
    }

    pub fn nf(&self) -> &NfDefinition {
        &self.nf
    }

    fn violated(&self, out: &mut PacketOutcome) -> bool {
        if out.violations.is_empty() {
            return false;
        }
        match self.policy {
            Policy::Continue => false,
            Policy::Drop => true,
            Policy::Abort => {
                out.abort = true;
                true
            }
        }
    }

    /// Processes one packet. `index` is its position in the input stream.
    pub fn process(&self, index: u64, bytes: Vec<u8>) -> PacketOutcome {
        let registry = self.engine.registry().clone();
        let mut out = PacketOutcome {
            output: None,
            violations: Vec::new(),
            nf_drop: None,
            passed_through: false,
            abort: false,
            timings: Timings::default(),
        };
        let packet = parsed(bytes, &registry);
        let contract = self.nf.contract.as_deref();

        let t = Instant::now();
        let ingress = contract.map(|c| self.engine.run_ingress(c, &packet, index)).unwrap_or_default();
        out.timings.ingress_contract_ns = elapsed(t);
        if !ingress.passed() {
            if self.nf.ingress_failure == IngressFailure::PassThrough {
                out.passed_through = true;
                out.output = Some(packet.into_bytes());
                return out;
            }
            out.violations = ingress.violations;
            if self.violated(&mut out) {
                return out;
            }
        }

        let t = Instant::now();
        let verdict = self.nf.apply(packet);
        out.timings.transform_ns = elapsed(t);
        let emitted = match verdict {
            Verdict::Emit(p) => p.into_bytes(),
            Verdict::Drop(reason) => {
                out.nf_drop = Some(reason);
                return out;
            }
        };

        if let Some(c) = contract.filter(|_| self.engine.mode() == BuildMode::Development) {
            let t = Instant::now();
            let wire = parsed(emitted, &registry);
            let v = self.engine.run_egress(c, &wire, ingress.snapshot.as_ref(), index);
            out.timings.egress_contract_ns = elapsed(t);
            out.violations.extend(v);
            if self.violated(&mut out) {
                return out;
            }
            out.output = Some(wire.into_bytes());
        } else {
            out.output = Some(emitted);
        }
        out
    }

    /// Runs every record through the NF. Output records keep their input
    /// timestamps. Stops early under [`Policy::Abort`].
    pub fn run(&self, records: impl IntoIterator<Item = Record>) -> (Vec<Record>, Summary) {
        let mut summary = Summary {
            nf: self.nf.name.clone(),
            mode: self.engine.mode().to_string(),
            ..Default::default()
        };
        let mut emitted = Vec::new();
        for (i, rec) in records.into_iter().enumerate() {
            let index = i as u64;
            let Record { ts_sec, ts_usec, orig_len, data } = rec;
            let original_len = data.len();
            let o = self.process(index, data);
            summary.packets_in += 1;
            summary.timings.add(&o.timings);
            for v in &o.violations {
                *summary.violations_by_check.entry(v.check_key()).or_default() += 1;
            }
            summary.violations.extend(o.violations);
            if o.passed_through {
                summary.packets_passed_through += 1;
            }
            if let Some(reason) = o.nf_drop {
                summary.nf_drops.push(DropRecord { packet_index: index, reason });
            }
            match o.output {
                Some(data) => {
                    summary.packets_out += 1;
                    let orig_len = if data.len() == original_len { orig_len } else { data.len() as u32 };
                    emitted.push(Record { ts_sec, ts_usec, orig_len, data });
                }
                None => summary.packets_dropped += 1,
            }
            if o.abort {
                summary.aborted = true;
                break;
            }
        }
        (emitted, summary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generator::{generate, GeneratorSpec, PayloadLen, Template};
    use crate::nf;

    fn tcp6(n: usize, len: usize) -> Vec<Record> {
        generate(&GeneratorSpec { count: n, template: Template::Tcp6, payload_len: PayloadLen::Fixed(len), seed: 3 })
            .unwrap()
    }

    fn pipeline(name: &str, mode: BuildMode, policy: Policy) -> Pipeline {
        let r = Arc::new(HeaderRegistry::standard());
        Pipeline::new(nf::lookup(name, &r).unwrap(), r, mode, policy)
    }

    #[test]
    fn conforming_traffic() {
        let p = pipeline("mtu-too-big", BuildMode::Development, Policy::Drop);
        let (out, s) = p.run(tcp6(20, 1300));
        assert_eq!((s.packets_in, s.packets_out, s.packets_dropped), (20, 20, 0));
        assert!(s.violations.is_empty(), "{}", s.render_text());
        assert!(out.iter().all(|r| r.data.len() == 1294 && r.orig_len == 1294));
    }

    #[test]
    fn small_packets_pass_through() {
        let p = pipeline("mtu-too-big", BuildMode::Development, Policy::Drop);
        let input = tcp6(5, 1280);
        let (out, s) = p.run(input.clone());
        assert_eq!(out, input);
        assert_eq!(s.packets_passed_through, 5);
        assert!(s.violations.is_empty());
    }

    #[test]
    fn policies() {
        let input = tcp6(10, 1300);
        let (out, s) = pipeline("mtu-too-big:no-eth-swap", BuildMode::Development, Policy::Drop).run(input.clone());
        assert_eq!((out.len(), s.violations.len(), s.packets_dropped), (0, 20, 10));
        let (out, s) = pipeline("mtu-too-big:no-eth-swap", BuildMode::Development, Policy::Continue).run(input.clone());
        assert_eq!((out.len(), s.violations.len(), s.packets_dropped), (10, 20, 0));
        let (out, s) = pipeline("mtu-too-big:no-eth-swap", BuildMode::Development, Policy::Abort).run(input);
        assert_eq!((out.len(), s.packets_in, s.violations.len()), (0, 1, 2));
        assert!(s.aborted);
    }

    #[test]
    fn srv6_ingress_failure_is_reported() {
        let p = pipeline("srv6-change-pkt", BuildMode::Development, Policy::Drop);
        let (_, s) = p.run(tcp6(3, 100));
        assert_eq!(s.packets_dropped, 3);
        assert!(s.violations.iter().all(|v| v.phase == crate::contract::Phase::Ingress));
        assert!(!s.violations.is_empty());
    }

    #[test]
    fn uncontracted_nf_runs_unmodified() {
        let r = Arc::new(HeaderRegistry::standard());
        let bare = Pipeline::new(nf::lookup_uncontracted("mtu-too-big").unwrap(), r, BuildMode::Development, Policy::Drop);
        let with = pipeline("mtu-too-big", BuildMode::Development, Policy::Drop);
        let input = tcp6(10, 1400);
        assert_eq!(bare.run(input.clone()).0, with.run(input).0);
        assert_eq!(bare.engine().checks_evaluated(), 0);
    }

    #[test]
    fn text_and_json_report() {
        let (_, s) = pipeline("mtu-too-big:no-ipv6-swap", BuildMode::Development, Policy::Drop).run(tcp6(2, 1300));
        let text = s.render_text();
        assert!(text.contains("NF mtu-too-big:no-ipv6-swap [egress#2] src[Ipv6Hdr]="));
        let j = s.to_json();
        for k in ["packets_in", "packets_out", "packets_dropped", "violations", "timings"] {
            assert!(j.get(k).is_some(), "{k}");
        }
        assert!(j["timings"].get("ingress_contract_ns").is_some());
    }
}

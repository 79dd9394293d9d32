// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, AtomicU8, Ordering};
use std::sync::Arc;

use thiserror::Error;

use super::{BoundCheck, Contract, IngressSnapshot, Phase, PhaseContract, ReportValue, Violation, ViolationKind};
use crate::packet::Packet;
use crate::registry::{ChainMismatch, HeaderRegistry, OrderSpec};

/// Whether dynamic contracts run. Static assertions and order verification
/// run during elaboration in both modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuildMode {
    Development,
    Production,
}

impl FromStr for BuildMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dev" | "development" => Ok(BuildMode::Development),
            "prod" | "production" => Ok(BuildMode::Production),
            other => Err(format!("unknown build mode {other:?}")),
        }
    }
}

impl fmt::Display for BuildMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BuildMode::Development => "dev",
            BuildMode::Production => "prod",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("build mode cannot change after {0} packets have been processed")]
    ModeLocked(u64),
}

/// Outcome of the ingress phase.
#[derive(Debug, Clone, Default)]
pub struct IngressOutcome {
    pub violations: Vec<Violation>,
    pub snapshot: Option<IngressSnapshot>,
}

impl IngressOutcome {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates elaborated contracts. Shareable across threads; counters are
/// atomic.
#[derive(Debug)]
pub struct ContractEngine {
    registry: Arc<HeaderRegistry>,
    mode: AtomicU8,
    packets_seen: AtomicU64,
    snapshots_built: AtomicU64,
    checks_evaluated: AtomicU64,
}

const DEV: u8 = 0;
const PROD: u8 = 1;

impl ContractEngine {
    pub fn new(registry: Arc<HeaderRegistry>, mode: BuildMode) -> Self {
        ContractEngine {
            registry,
            mode: AtomicU8::new(Self::encode(mode)),
            packets_seen: AtomicU64::new(0),
            snapshots_built: AtomicU64::new(0),
            checks_evaluated: AtomicU64::new(0),
        }
    }

    fn encode(mode: BuildMode) -> u8 {
        match mode {
            BuildMode::Development => DEV,
            BuildMode::Production => PROD,
        }
    }

    pub fn registry(&self) -> &Arc<HeaderRegistry> {
        &self.registry
    }

    pub fn mode(&self) -> BuildMode {
        match self.mode.load(Ordering::Relaxed) {
            DEV => BuildMode::Development,
            _ => BuildMode::Production,
        }
    }

    /// Switches mode; refused once any packet has gone through the engine.
    pub fn set_build_mode(&self, mode: BuildMode) -> Result<(), ConfigError> {
        let seen = self.packets_seen.load(Ordering::SeqCst);
        if seen > 0 {
            return Err(ConfigError::ModeLocked(seen));
        }
        self.mode.store(Self::encode(mode), Ordering::SeqCst);
        Ok(())
    }

    pub fn snapshots_built(&self) -> u64 {
        self.snapshots_built.load(Ordering::Relaxed)
    }

    pub fn checks_evaluated(&self) -> u64 {
        self.checks_evaluated.load(Ordering::Relaxed)
    }

    pub fn packets_seen(&self) -> u64 {
        self.packets_seen.load(Ordering::Relaxed)
    }

    fn dynamic(&self) -> bool {
        self.mode.load(Ordering::Relaxed) == DEV
    }

    pub fn build_snapshot(&self, packet: &Packet, spec: &OrderSpec) -> Result<IngressSnapshot, ChainMismatch> {
        let snap = IngressSnapshot::capture(packet, spec, &self.registry)?;
        self.snapshots_built.fetch_add(1, Ordering::Relaxed);
        Ok(snap)
    }

    /// Evaluates one check. Resolution failures are reported as violations
    /// of kind [`ViolationKind::Resolution`].
    #[allow(clippy::too_many_arguments, clippy::result_large_err)]
    pub fn eval_check(
        &self,
        nf: &str,
        phase: Phase,
        index: usize,
        check: &BoundCheck,
        packet: &Packet,
        snapshot: Option<&IngressSnapshot>,
        packet_index: u64,
    ) -> Result<(), Violation> {
        self.checks_evaluated.fetch_add(1, Ordering::Relaxed);
        let lhs = check.lhs.resolve(packet, snapshot);
        let rhs = check.rhs.resolve(packet, snapshot);
        let outcome = match (&lhs, &rhs) {
            (Ok(l), Ok(r)) => check.op.apply(l, r).map_err(|e| e.to_string()),
            (Err(e), _) | (_, Err(e)) => Err(e.to_string()),
        };
        let (kind, detail) = match outcome {
            Ok(true) => return Ok(()),
            Ok(false) => (ViolationKind::Check, String::new()),
            Err(detail) => (ViolationKind::Resolution, detail),
        };
        Err(Violation::new(
            nf,
            phase,
            Some(index),
            kind,
            check.lhs.field.to_string(),
            lhs.as_ref().ok().map(ReportValue::from),
            check.op.to_string(),
            check.rhs.to_string(),
            rhs.as_ref().ok().map(ReportValue::from),
            packet_index,
            detail,
        ))
    }

    fn order_violation(nf: &str, phase: Phase, spec: &OrderSpec, packet: &Packet, m: &ChainMismatch, n: u64) -> Violation {
        let actual: Vec<_> = packet.chain().iter().map(|e| e.header.name()).collect();
        Violation::new(
            nf,
            phase,
            None,
            ViolationKind::Order,
            "order".into(),
            Some(ReportValue::Text(format!("[{}]", actual.join(" => ")))),
            "==".into(),
            "expected".into(),
            Some(ReportValue::Text(spec.to_string())),
            n,
            m.to_string(),
        )
    }

    fn run_phase(
        &self,
        nf: &str,
        phase: Phase,
        pc: &PhaseContract,
        packet: &Packet,
        snapshot: Option<&IngressSnapshot>,
        n: u64,
    ) -> Vec<Violation> {
        let mut out = Vec::new();
        if let Err(m) = self.registry.match_chain(packet, &pc.order) {
            out.push(Self::order_violation(nf, phase, &pc.order, packet, &m, n));
        }
        for (i, c) in pc.checks.iter().enumerate() {
            if let Err(v) = self.eval_check(nf, phase, i, c, packet, snapshot, n) {
                out.push(v);
            }
        }
        out
    }

    /// Ingress phase: order match, then every check; builds the snapshot
    /// when the order matched. A no-op in production mode.
    pub fn run_ingress(&self, contract: &Contract, packet: &Packet, packet_index: u64) -> IngressOutcome {
        self.packets_seen.fetch_add(1, Ordering::Relaxed);
        if !self.dynamic() {
            return IngressOutcome::default();
        }
        let Some(pc) = &contract.ingress else {
            return IngressOutcome::default();
        };
        let violations = self.run_phase(&contract.nf_name, Phase::Ingress, pc, packet, None, packet_index);
        let snapshot = self.build_snapshot(packet, &pc.order).ok();
        IngressOutcome { violations, snapshot }
    }

    /// Egress phase: order match, then every check, with snapshot-sourced
    /// operands read from `snapshot`. A no-op in production mode.
    pub fn run_egress(
        &self,
        contract: &Contract,
        packet: &Packet,
        snapshot: Option<&IngressSnapshot>,
        packet_index: u64,
    ) -> Vec<Violation> {
        if !self.dynamic() {
            return Vec::new();
        }
        match &contract.egress {
            Some(pc) => self.run_phase(&contract.nf_name, Phase::Egress, pc, packet, snapshot, packet_index),
            None => Vec::new(),
        }
    }
}

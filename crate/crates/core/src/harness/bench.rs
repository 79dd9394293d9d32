// SPDX-License-Identifier: Apache-2.0

//! Per-phase cost of contract checking.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use super::pcap::Record;
use super::pipeline::{Pipeline, Policy, Timings};
use crate::contract::BuildMode;
use crate::nf::NfDefinition;
use crate::registry::HeaderRegistry;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Stat {
    pub mean_ns: f64,
    pub stddev_ns: f64,
}

impl Stat {
    /// Mean and sample standard deviation.
    pub fn of(samples: &[f64]) -> Stat {
        let n = samples.len() as f64;
        if samples.is_empty() {
            return Stat::default();
        }
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 { samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Stat { mean_ns: mean, stddev_ns: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub nf: String,
    pub packets: usize,
    pub repetitions: usize,
    /// Per-repetition phase totals with contracts on.
    pub ingress_contract: Stat,
    pub transform: Stat,
    pub egress_contract: Stat,
    /// Wall time of a whole run.
    pub contracts_on_total: Stat,
    pub contracts_off_total: Stat,
    /// Ingress contract time over ingress plus egress contract time.
    pub ingress_share: f64,
    pub egress_share: f64,
}

impl BenchReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn render_text(&self) -> String {
        let row = |name: &str, s: &Stat| format!("  {name:<20} mean {:>14.0} ns  stddev {:>12.0} ns\n", s.mean_ns, s.stddev_ns);
        let mut out = format!("bench nf={} packets={} repetitions={}\n", self.nf, self.packets, self.repetitions);
        out += &row("ingress contract", &self.ingress_contract);
        out += &row("transform", &self.transform);
        out += &row("egress contract", &self.egress_contract);
        out += &row("total, contracts on", &self.contracts_on_total);
        out += &row("total, contracts off", &self.contracts_off_total);
        out += &format!(
            "  contract overhead share: ingress {:.1}%  egress {:.1}%\n",
            self.ingress_share * 100.0,
            self.egress_share * 100.0
        );
        out
    }
}

/// Runs `records` through `nf` `repetitions` times in each build mode.
/// Contract violations are tolerated (policy continue) so every run does
/// the same work.
pub fn bench(nf: &NfDefinition, registry: Arc<HeaderRegistry>, records: &[Record], repetitions: usize) -> BenchReport {
    let repetitions = repetitions.max(1);
    let mut phases: Vec<Timings> = Vec::with_capacity(repetitions);
    let mut on = Vec::with_capacity(repetitions);
    let mut off = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        for (mode, totals) in [(BuildMode::Development, &mut on), (BuildMode::Production, &mut off)] {
            let p = Pipeline::new(nf.clone(), registry.clone(), mode, Policy::Continue);
            let input = records.to_vec();
            let t = Instant::now();
            let (_, summary) = p.run(input);
            totals.push(t.elapsed().as_nanos() as f64);
            if mode == BuildMode::Development {
                phases.push(summary.timings);
            }
        }
    }
    let stat = |f: fn(&Timings) -> u64| Stat::of(&phases.iter().map(|t| f(t) as f64).collect::<Vec<_>>());
    let ingress_contract = stat(|t| t.ingress_contract_ns);
    let egress_contract = stat(|t| t.egress_contract_ns);
    let overhead = ingress_contract.mean_ns + egress_contract.mean_ns;
    let share = |x: f64| if overhead > 0.0 { x / overhead } else { 0.0 };
    BenchReport {
        nf: nf.name.clone(),
        packets: records.len(),
        repetitions,
        ingress_contract,
        transform: stat(|t| t.transform_ns),
        egress_contract,
        contracts_on_total: Stat::of(&on),
        contracts_off_total: Stat::of(&off),
        ingress_share: share(ingress_contract.mean_ns),
        egress_share: share(egress_contract.mean_ns),
    }
}

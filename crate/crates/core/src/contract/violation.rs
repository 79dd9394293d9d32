// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::Serialize;

use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Ingress,
    Egress,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Ingress => "ingress",
            Phase::Egress => "egress",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    /// Both sides resolved and the comparison was false.
    Check,
    /// The parsed header chain did not match the phase's order.
    Order,
    /// An operand could not be resolved.
    Resolution,
}

/// Reported value: integers stay numeric, everything else is rendered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum ReportValue {
    Int(u64),
    Text(String),
}

impl From<&Value> for ReportValue {
    fn from(v: &Value) -> Self {
        match v {
            Value::Int(i) => ReportValue::Int(*i),
            other => ReportValue::Text(other.to_string()),
        }
    }
}

impl fmt::Display for ReportValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportValue::Int(v) => write!(f, "{v}"),
            ReportValue::Text(s) => f.write_str(s),
        }
    }
}

/// One failed check (or failed order match) on one packet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub nf: String,
    pub phase: Phase,
    /// `None` for an order mismatch.
    pub check_index: Option<usize>,
    pub kind: ViolationKind,
    pub lhs: String,
    pub lhs_value: Option<ReportValue>,
    pub op: String,
    pub rhs: String,
    pub rhs_value: Option<ReportValue>,
    pub packet_index: u64,
    /// Why resolution or order matching failed; empty for plain check failures.
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
    pub message: String,
}

impl Violation {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        nf: &str,
        phase: Phase,
        check_index: Option<usize>,
        kind: ViolationKind,
        lhs: String,
        lhs_value: Option<ReportValue>,
        op: String,
        rhs: String,
        rhs_value: Option<ReportValue>,
        packet_index: u64,
        detail: String,
    ) -> Self {
        let mut v = Violation {
            nf: nf.to_string(),
            phase,
            check_index,
            kind,
            lhs,
            lhs_value,
            op,
            rhs,
            rhs_value,
            packet_index,
            detail,
            message: String::new(),
        };
        v.message = v.render();
        v
    }

    fn render(&self) -> String {
        let idx = self.check_index.map_or_else(|| "order".to_string(), |i| i.to_string());
        let val = |v: &Option<ReportValue>| v.as_ref().map_or_else(|| "?".to_string(), ToString::to_string);
        let mut s = format!(
            "NF {} [{}#{}] {}={} {} {}={} FAILED (packet {})",
            self.nf,
            self.phase,
            idx,
            self.lhs,
            val(&self.lhs_value),
            self.op,
            self.rhs,
            val(&self.rhs_value),
            self.packet_index
        );
        if !self.detail.is_empty() {
            s.push_str(": ");
            s.push_str(&self.detail);
        }
        s
    }

    /// Stable key for grouping violations by the check that produced them.
    pub fn check_key(&self) -> String {
        match self.check_index {
            Some(i) => format!("{}#{} {} {} {}", self.phase, i, self.lhs, self.op, self.rhs),
            None => format!("{}#order", self.phase),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("violation serializes")
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_json_forms() {
        let v = Violation::new(
            "mtu-too-big",
            Phase::Egress,
            Some(2),
            ViolationKind::Check,
            "src[Ipv6Hdr]".into(),
            Some(ReportValue::Text("2001:db8::1".into())),
            "==".into(),
            "ingress.dst[Ipv6Hdr]".into(),
            Some(ReportValue::Text("2001:db8::2".into())),
            7,
            String::new(),
        );
        assert_eq!(
            v.to_string(),
            "NF mtu-too-big [egress#2] src[Ipv6Hdr]=2001:db8::1 == ingress.dst[Ipv6Hdr]=2001:db8::2 FAILED (packet 7)"
        );
        let j = v.to_json();
        for key in ["nf", "phase", "check_index", "lhs", "lhs_value", "op", "rhs", "rhs_value", "packet_index"] {
            assert!(j.get(key).is_some(), "missing {key}");
        }
        assert_eq!(j["phase"], "egress");
        assert_eq!(j["check_index"], 2);
    }
}

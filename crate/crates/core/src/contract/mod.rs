// SPDX-License-Identifier: Apache-2.0

//! Runtime side of NF contracts: field references, checks, the ingress
//! snapshot, violation records and the engine that evaluates them.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::packet::{HeaderId, Packet};
use crate::registry::{HeaderRegistry, OrderElem, OrderSpec};
use crate::value::{Value, ValueKind};

mod engine;
mod snapshot;
mod violation;

pub use engine::{BuildMode, ConfigError, ContractEngine, IngressOutcome};
pub use snapshot::{IngressSnapshot, SnapshotEntry};
pub use violation::{Phase, ReportValue, Violation, ViolationKind};

/// Where a field reference reads from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    CurrentPacket,
    IngressSnapshot,
}

/// `accessor[Header<Param>]`, optionally naming a later occurrence of a
/// stacked header.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldRef {
    pub accessor: String,
    pub header: OrderElem,
    pub occurrence: usize,
    pub source: Source,
}

impl FieldRef {
    pub fn current(accessor: &str, header: OrderElem) -> Self {
        FieldRef { accessor: accessor.to_string(), header, occurrence: 0, source: Source::CurrentPacket }
    }

    pub fn ingress(accessor: &str, header: OrderElem) -> Self {
        FieldRef { source: Source::IngressSnapshot, ..Self::current(accessor, header) }
    }
}

impl fmt::Display for FieldRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.source == Source::IngressSnapshot {
            f.write_str("ingress.")?;
        }
        write!(f, "{}[{}", self.accessor, self.header)?;
        if self.occurrence > 0 {
            write!(f, "#{}", self.occurrence)?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
}

impl fmt::Display for ArithOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
        })
    }
}

/// Right-hand side of a check.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Literal(u64),
    Constant(String),
    Field(FieldRef),
    /// Integer offset such as `payload_len[Ipv6Hdr] + 16`.
    Arith(Box<Operand>, ArithOp, Box<Operand>),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Literal(v) => write!(f, "{v}"),
            Operand::Constant(n) => f.write_str(n),
            Operand::Field(r) => write!(f, "{r}"),
            Operand::Arith(a, op, b) => write!(f, "{a} {op} {b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "==" => Comparator::Eq,
            "neq" => Comparator::Neq,
            "<" => Comparator::Lt,
            "<=" => Comparator::Le,
            ">" => Comparator::Gt,
            ">=" => Comparator::Ge,
            _ => return None,
        })
    }

    pub fn is_equality(self) -> bool {
        matches!(self, Comparator::Eq | Comparator::Neq)
    }

    pub fn holds<T: Ord>(self, a: &T, b: &T) -> bool {
        match self {
            Comparator::Eq => a == b,
            Comparator::Neq => a != b,
            Comparator::Lt => a < b,
            Comparator::Le => a <= b,
            Comparator::Gt => a > b,
            Comparator::Ge => a >= b,
        }
    }

    /// Applies the comparator to resolved values. Byte-like values admit
    /// only `==` and `neq`.
    pub fn apply(self, lhs: &Value, rhs: &Value) -> Result<bool, ResolveError> {
        if self.is_equality() {
            let eq = lhs.equals(rhs).ok_or(ResolveError::Incomparable {
                op: self,
                lhs: lhs.kind(),
                rhs: rhs.kind(),
            })?;
            return Ok(eq == (self == Comparator::Eq));
        }
        match (lhs, rhs) {
            (Value::Int(a), Value::Int(b)) => Ok(self.holds(a, b)),
            _ => Err(ResolveError::Incomparable { op: self, lhs: lhs.kind(), rhs: rhs.kind() }),
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparator::Eq => "==",
            Comparator::Neq => "neq",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        })
    }
}

/// `(lhs, op, rhs)`; the left side always reads the current packet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Check {
    pub lhs: FieldRef,
    pub op: Comparator,
    pub rhs: Operand,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.lhs, self.op, self.rhs)
    }
}

/// Named integer constants declared with a contract.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstantBindings(BTreeMap<String, u64>);

impl ConstantBindings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds `name`; returns false if it was already bound.
    pub fn bind(&mut self, name: &str, value: u64) -> bool {
        if self.0.contains_key(name) {
            return false;
        }
        self.0.insert(name.to_string(), value);
        true
    }

    pub fn get(&self, name: &str) -> Option<u64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("unknown header type {0}")]
    UnknownHeader(HeaderId),
    #[error("{header} has no accessor {accessor}")]
    UnknownAccessor { header: HeaderId, accessor: String },
    #[error("constant {0} is not bound")]
    UnboundConstant(String),
    #[error("{0}: header not present in packet")]
    MissingHeader(String),
    #[error("{field}: no enclosing {param} before it")]
    MissingParameter { field: String, param: HeaderId },
    #[error("{0}: no ingress snapshot available")]
    NoSnapshot(String),
    #[error("{0}: header not present in ingress snapshot")]
    NotInSnapshot(String),
    #[error("{op} cannot compare {lhs} with {rhs}")]
    Incomparable { op: Comparator, lhs: ValueKind, rhs: ValueKind },
    #[error("{0}: arithmetic needs integer operands")]
    NonIntegerArithmetic(String),
    #[error("{0}: result outside the unsigned 64-bit range")]
    OutOfRange(String),
}

/// Field reference with its accessor looked up.
#[derive(Debug, Clone)]
pub struct BoundField {
    pub field: FieldRef,
    pub kind: ValueKind,
    get: fn(&Packet, usize) -> Value,
}

impl BoundField {
    pub fn bind(field: &FieldRef, registry: &HeaderRegistry) -> Result<Self, ResolveError> {
        let d = registry.get(field.header.header).ok_or(ResolveError::UnknownHeader(field.header.header))?;
        let a = d.accessor(&field.accessor).ok_or_else(|| ResolveError::UnknownAccessor {
            header: field.header.header,
            accessor: field.accessor.clone(),
        })?;
        Ok(BoundField { field: field.clone(), kind: a.kind, get: a.get })
    }

    pub fn resolve(&self, packet: &Packet, snapshot: Option<&IngressSnapshot>) -> Result<Value, ResolveError> {
        let f = &self.field;
        match f.source {
            Source::CurrentPacket => {
                let idx = packet
                    .position(f.header.header, f.occurrence)
                    .ok_or_else(|| ResolveError::MissingHeader(f.to_string()))?;
                if let Some(param) = f.header.param {
                    if !packet.chain()[..idx].iter().any(|e| e.header == param) {
                        return Err(ResolveError::MissingParameter { field: f.to_string(), param });
                    }
                }
                Ok((self.get)(packet, idx))
            }
            Source::IngressSnapshot => {
                let snap = snapshot.ok_or_else(|| ResolveError::NoSnapshot(f.to_string()))?;
                snap.resolve(f)
            }
        }
    }
}

/// Operand with constants folded and fields bound.
#[derive(Debug, Clone)]
pub enum BoundOperand {
    /// A literal or a named constant, with its spelling kept for reports.
    Const { desc: String, value: u64 },
    Field(BoundField),
    Arith(Box<BoundOperand>, ArithOp, Box<BoundOperand>),
}

impl BoundOperand {
    pub fn bind(op: &Operand, constants: &ConstantBindings, registry: &HeaderRegistry) -> Result<Self, ResolveError> {
        Ok(match op {
            Operand::Literal(v) => BoundOperand::Const { desc: v.to_string(), value: *v },
            Operand::Constant(n) => BoundOperand::Const {
                desc: n.clone(),
                value: constants.get(n).ok_or_else(|| ResolveError::UnboundConstant(n.clone()))?,
            },
            Operand::Field(r) => BoundOperand::Field(BoundField::bind(r, registry)?),
            Operand::Arith(a, o, b) => BoundOperand::Arith(
                Box::new(Self::bind(a, constants, registry)?),
                *o,
                Box::new(Self::bind(b, constants, registry)?),
            ),
        })
    }

    /// Kind of value this operand yields.
    pub fn kind(&self) -> ValueKind {
        match self {
            BoundOperand::Const { .. } | BoundOperand::Arith(..) => ValueKind::Int,
            BoundOperand::Field(f) => f.kind,
        }
    }

    pub fn resolve(&self, packet: &Packet, snapshot: Option<&IngressSnapshot>) -> Result<Value, ResolveError> {
        match self {
            BoundOperand::Const { value, .. } => Ok(Value::Int(*value)),
            BoundOperand::Field(f) => f.resolve(packet, snapshot),
            BoundOperand::Arith(..) => {
                let v = self.resolve_wide(packet, snapshot)?;
                u64::try_from(v).map(Value::Int).map_err(|_| ResolveError::OutOfRange(self.to_string()))
            }
        }
    }

    fn resolve_wide(&self, packet: &Packet, snapshot: Option<&IngressSnapshot>) -> Result<i128, ResolveError> {
        match self {
            BoundOperand::Arith(a, op, b) => {
                let (a, b) = (a.resolve_wide(packet, snapshot)?, b.resolve_wide(packet, snapshot)?);
                Ok(match op {
                    ArithOp::Add => a + b,
                    ArithOp::Sub => a - b,
                })
            }
            other => match other.resolve(packet, snapshot)? {
                Value::Int(v) => Ok(v.into()),
                _ => Err(ResolveError::NonIntegerArithmetic(other.to_string())),
            },
        }
    }
}

impl fmt::Display for BoundOperand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundOperand::Const { desc, .. } => f.write_str(desc),
            BoundOperand::Field(b) => write!(f, "{}", b.field),
            BoundOperand::Arith(a, op, b) => write!(f, "{a} {op} {b}"),
        }
    }
}

/// Resolves an operand against a packet, an optional ingress snapshot and
/// constant bindings.
pub fn resolve_operand(
    operand: &Operand,
    packet: &Packet,
    snapshot: Option<&IngressSnapshot>,
    constants: &ConstantBindings,
    registry: &HeaderRegistry,
) -> Result<Value, ResolveError> {
    BoundOperand::bind(operand, constants, registry)?.resolve(packet, snapshot)
}

/// A check in closed form, ready to evaluate.
#[derive(Debug, Clone)]
pub struct BoundCheck {
    pub lhs: BoundField,
    pub op: Comparator,
    pub rhs: BoundOperand,
}

impl BoundCheck {
    pub fn bind(check: &Check, constants: &ConstantBindings, registry: &HeaderRegistry) -> Result<Self, ResolveError> {
        Ok(BoundCheck {
            lhs: BoundField::bind(&check.lhs, registry)?,
            op: check.op,
            rhs: BoundOperand::bind(&check.rhs, constants, registry)?,
        })
    }
}

impl fmt::Display for BoundCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.lhs.field, self.op, self.rhs)
    }
}

/// Expected order plus checks for one side of an NF.
#[derive(Debug, Clone)]
pub struct PhaseContract {
    pub order: OrderSpec,
    pub checks: Vec<BoundCheck>,
}

/// Result of one evaluated static assertion, kept for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticResult {
    pub expr: String,
    pub lhs: i128,
    pub rhs: i128,
}

/// Executable contract attached to an NF.
#[derive(Debug, Clone)]
pub struct Contract {
    pub nf_name: String,
    pub constants: ConstantBindings,
    pub static_assertions: Vec<StaticResult>,
    pub ingress: Option<PhaseContract>,
    pub egress: Option<PhaseContract>,
}

impl fmt::Display for Contract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nf {}", self.nf_name)?;
        if !self.constants.is_empty() {
            let c: Vec<_> = self.constants.iter().map(|(k, v)| format!("{k} = {v}")).collect();
            writeln!(f, "constants: {}", c.join(", "))?;
        }
        for s in &self.static_assertions {
            writeln!(f, "static: {}  [{} vs {}] ok", s.expr, s.lhs, s.rhs)?;
        }
        for (name, phase) in [("ingress", &self.ingress), ("egress", &self.egress)] {
            let Some(p) = phase else {
                writeln!(f, "{name}: none")?;
                continue;
            };
            writeln!(f, "{name} order: {}", p.order)?;
            for (i, c) in p.checks.iter().enumerate() {
                write!(f, "  #{i} {} {} {}", c.lhs.field, c.op, c.rhs)?;
                if let BoundOperand::Const { desc, value } = &c.rhs {
                    if *desc != value.to_string() {
                        write!(f, " (= {value})")?;
                    }
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Turns contract text into an executable [`Contract`].
//!
//! Elaboration happens once, before any packet flows: header orders are
//! verified against the registry, static assertions over the bound
//! constants are evaluated, snapshot references are checked against the
//! ingress order and every check is bound to its accessors with constants
//! folded. All of this runs regardless of build mode.

use std::fmt;

use thiserror::Error;

use crate::contract::{
    BoundCheck, BoundOperand, Check, Comparator, ConstantBindings, Contract, FieldRef, Operand, Phase, PhaseContract,
    ResolveError, Source, StaticResult,
};
use crate::packet::HeaderId;
use crate::registry::{HeaderRegistry, OrderError, OrderSpec};
use crate::value::ValueKind;

mod lexer;
mod parser;

/// Integer expression over constants and literals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StaticTerm {
    Int(u64),
    Name(String),
    Add(Box<StaticTerm>, Box<StaticTerm>),
    Sub(Box<StaticTerm>, Box<StaticTerm>),
    Mul(Box<StaticTerm>, Box<StaticTerm>),
}

impl StaticTerm {
    pub fn eval(&self, constants: &ConstantBindings) -> Result<i128, ElaborationError> {
        let overflow = || ElaborationError::StaticOverflow(self.to_string());
        Ok(match self {
            StaticTerm::Int(v) => (*v).into(),
            StaticTerm::Name(n) => constants
                .get(n)
                .ok_or_else(|| ElaborationError::UnboundConstant { line: 0, col: 0, name: n.clone() })?
                .into(),
            StaticTerm::Add(a, b) => a.eval(constants)?.checked_add(b.eval(constants)?).ok_or_else(overflow)?,
            StaticTerm::Sub(a, b) => a.eval(constants)?.checked_sub(b.eval(constants)?).ok_or_else(overflow)?,
            StaticTerm::Mul(a, b) => a.eval(constants)?.checked_mul(b.eval(constants)?).ok_or_else(overflow)?,
        })
    }

    fn is_sum(&self) -> bool {
        matches!(self, StaticTerm::Add(..) | StaticTerm::Sub(..))
    }
}

impl fmt::Display for StaticTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StaticTerm::Int(v) => write!(f, "{v}"),
            StaticTerm::Name(n) => f.write_str(n),
            StaticTerm::Add(a, b) => write!(f, "{a} + {b}"),
            StaticTerm::Sub(a, b) if b.is_sum() => write!(f, "{a} - ({b})"),
            StaticTerm::Sub(a, b) => write!(f, "{a} - {b}"),
            StaticTerm::Mul(a, b) => {
                let wrap = |t: &StaticTerm| if t.is_sum() { format!("({t})") } else { t.to_string() };
                write!(f, "{} * {}", wrap(a), wrap(b))
            }
        }
    }
}

/// `lhs op rhs` over constants, checked during elaboration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticAssertion {
    pub lhs: StaticTerm,
    pub op: Comparator,
    pub rhs: StaticTerm,
}

impl StaticAssertion {
    pub fn evaluate(&self, constants: &ConstantBindings) -> Result<StaticResult, ElaborationError> {
        let (lhs, rhs) = (self.lhs.eval(constants)?, self.rhs.eval(constants)?);
        if !self.op.holds(&lhs, &rhs) {
            return Err(ElaborationError::StaticAssertion { expr: self.to_string(), lhs, rhs });
        }
        Ok(StaticResult { expr: self.to_string(), lhs, rhs })
    }
}

impl fmt::Display for StaticAssertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op, self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseSpec {
    pub order: OrderSpec,
    pub checks: Vec<Check>,
}

/// Parsed but not yet elaborated contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractSpec {
    pub nf_name: String,
    pub constants: ConstantBindings,
    pub static_assertions: Vec<StaticAssertion>,
    pub ingress: Option<PhaseSpec>,
    pub egress: Option<PhaseSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElaborationError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown header type {name}")]
    UnknownHeader { line: usize, col: usize, name: String },
    #[error("{line}:{col}: {header} has no accessor {accessor}")]
    UnknownAccessor { line: usize, col: usize, header: HeaderId, accessor: String },
    #[error("{line}:{col}: constant {name} is not bound")]
    UnboundConstant { line: usize, col: usize, name: String },
    #[error("{line}:{col}: constant {name} bound twice")]
    DuplicateConstant { line: usize, col: usize, name: String },
    #[error("{phase} order rejected: {source}")]
    Order { phase: Phase, source: OrderError },
    #[error("static assertion failed: {expr} ({lhs} vs {rhs})")]
    StaticAssertion { expr: String, lhs: i128, rhs: i128 },
    #[error("static expression overflows: {0}")]
    StaticOverflow(String),
    #[error("check {check} reads ingress {header}, which the ingress order does not contain")]
    DanglingSnapshot { check: String, header: HeaderId },
    #[error("check {check}: {reason}")]
    Type { check: String, reason: String },
    #[error("check {check}: {source}")]
    Bind { check: String, source: ResolveError },
}

/// Parses a contract block, resolving header and accessor names against
/// `registry` and constant names against the block's own bindings.
pub fn parse_contract_spec(text: &str, nf_name: &str, registry: &HeaderRegistry) -> Result<ContractSpec, ElaborationError> {
    parser::Parser::new(text, registry)?.parse_spec(nf_name)
}

fn snapshot_refs(op: &Operand, out: &mut Vec<FieldRef>) {
    match op {
        Operand::Field(f) if f.source == Source::IngressSnapshot => out.push(f.clone()),
        Operand::Arith(a, _, b) => {
            snapshot_refs(a, out);
            snapshot_refs(b, out);
        }
        _ => {}
    }
}

fn type_check(c: &BoundCheck, src: &Check) -> Result<(), ElaborationError> {
    let fail = |reason: String| Err(ElaborationError::Type { check: src.to_string(), reason });
    if let BoundOperand::Arith(..) = &c.rhs {
        let mut stack = vec![&c.rhs];
        while let Some(o) = stack.pop() {
            match o {
                BoundOperand::Arith(a, _, b) => stack.extend([a.as_ref(), b.as_ref()]),
                BoundOperand::Field(f) if !f.kind.is_integer() => {
                    return fail(format!("{} is a {} and cannot take part in arithmetic", f.field, f.kind))
                }
                _ => {}
            }
        }
    }
    let (l, r) = (c.lhs.kind, c.rhs.kind());
    if !c.op.is_equality() && !(l.is_integer() && r.is_integer()) {
        return fail(format!("{} only applies to integers, not {l} and {r}", c.op));
    }
    if l.is_integer() != r.is_integer() {
        return fail(format!("cannot compare {l} with {r}"));
    }
    if l != r && (l == ValueKind::Mac || r == ValueKind::Mac || l == ValueKind::Ipv6 || r == ValueKind::Ipv6) && l != ValueKind::Bytes && r != ValueKind::Bytes {
        return fail(format!("cannot compare {l} with {r}"));
    }
    Ok(())
}

fn elaborate_phase(
    phase: Phase,
    spec: &PhaseSpec,
    ingress_order: Option<&OrderSpec>,
    constants: &ConstantBindings,
    registry: &HeaderRegistry,
) -> Result<PhaseContract, ElaborationError> {
    registry.verify_order(&spec.order).map_err(|source| ElaborationError::Order { phase, source })?;
    let mut checks = Vec::with_capacity(spec.checks.len());
    for c in &spec.checks {
        let mut refs = Vec::new();
        snapshot_refs(&c.rhs, &mut refs);
        for r in refs {
            if !ingress_order.is_some_and(|o| o.contains(r.header.header)) {
                return Err(ElaborationError::DanglingSnapshot { check: c.to_string(), header: r.header.header });
            }
        }
        let bound = BoundCheck::bind(c, constants, registry)
            .map_err(|source| ElaborationError::Bind { check: c.to_string(), source })?;
        type_check(&bound, c)?;
        checks.push(bound);
    }
    Ok(PhaseContract { order: spec.order.clone(), checks })
}

/// Produces the executable contract. Fails on any order violation, failed
/// static assertion, dangling snapshot reference or ill-typed check.
pub fn elaborate(spec: &ContractSpec, registry: &HeaderRegistry) -> Result<Contract, ElaborationError> {
    let static_assertions =
        spec.static_assertions.iter().map(|a| a.evaluate(&spec.constants)).collect::<Result<Vec<_>, _>>()?;
    let ingress = spec
        .ingress
        .as_ref()
        .map(|p| elaborate_phase(Phase::Ingress, p, None, &spec.constants, registry))
        .transpose()?;
    let ingress_order = spec.ingress.as_ref().map(|p| &p.order);
    let egress = spec
        .egress
        .as_ref()
        .map(|p| elaborate_phase(Phase::Egress, p, ingress_order, &spec.constants, registry))
        .transpose()?;
    Ok(Contract {
        nf_name: spec.nf_name.clone(),
        constants: spec.constants.clone(),
        static_assertions,
        ingress,
        egress,
    })
}

/// Parses and elaborates in one step.
pub fn compile(text: &str, nf_name: &str, registry: &HeaderRegistry) -> Result<Contract, ElaborationError> {
    elaborate(&parse_contract_spec(text, nf_name, registry)?, registry)
}

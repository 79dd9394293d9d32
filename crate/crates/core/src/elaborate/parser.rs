// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser for contract blocks:
//!
//! ```text
//! spec      := ("#[")? "check" "(" bindings? ")" ("]")? block*
//! bindings  := NAME "=" INT ("," NAME "=" INT)*
//! block     := ("pre" | "post") "{" ("input" ":" NAME ",")? "order" ":" order ","
//!                                   "checks" ":" "[" check ("," check)* "]" ","? "}"
//!            | "static" ":" "[" expr ("," expr)* "]"
//! order     := "[" hdr ("=>" hdr)* "]"
//! hdr       := NAME ("<" (NAME | "...") ">")?
//! check     := "(" fieldref "," OP "," operand ")"
//! fieldref  := "."? NAME "[" hdr ("#" INT)? "]"
//! operand   := term (("+" | "-") term)*        term := INT | NAME | fieldref
//! expr      := sum OP sum    sum := prod (("+" | "-") prod)*
//! prod      := atom ("*" atom)*                atom := INT | NAME | "(" sum ")"
//! OP        := "==" | "neq" | "<" | "<=" | ">" | ">="
//! ```

use super::lexer::{tokenize, Tok, Token};
use super::{ContractSpec, ElaborationError, PhaseSpec, StaticAssertion, StaticTerm};
use crate::contract::{ArithOp, Check, Comparator, ConstantBindings, FieldRef, Operand, Source};
use crate::packet::HeaderId;
use crate::registry::{HeaderRegistry, OrderElem, OrderSpec};

pub(super) struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    registry: &'a HeaderRegistry,
    constants: ConstantBindings,
}

type PResult<T> = Result<T, ElaborationError>;

impl<'a> Parser<'a> {
    pub(super) fn new(src: &str, registry: &'a HeaderRegistry) -> PResult<Self> {
        Ok(Parser { toks: tokenize(src)?, pos: 0, registry, constants: ConstantBindings::new() })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = self.peek();
        Err(ElaborationError::Syntax { line: t.line, col: t.col, msg: msg.into() })
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(x) if *x == s)
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(x) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.is_sym(s);
        if hit {
            self.bump();
        }
        hit
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", Self::describe(&self.peek().tok)))
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, usize, usize)> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(s) => {
                self.bump();
                Ok((s, t.line, t.col))
            }
            other => self.err(format!("expected a name, found {}", Self::describe(&other))),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.is_ident(kw) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", Self::describe(&self.peek().tok)))
        }
    }

    fn expect_int(&mut self) -> PResult<u64> {
        match self.peek().tok {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            ref other => self.err(format!("expected an integer, found {}", Self::describe(other))),
        }
    }

    pub(super) fn parse_spec(mut self, nf_name: &str) -> PResult<ContractSpec> {
        let wrapped = self.eat_sym("#");
        if wrapped {
            self.expect_sym("[")?;
        }
        self.expect_keyword("check")?;
        self.expect_sym("(")?;
        if !self.is_sym(")") {
            loop {
                let (name, line, col) = self.expect_ident()?;
                self.expect_sym("=")?;
                let v = self.expect_int()?;
                if !self.constants.bind(&name, v) {
                    return Err(ElaborationError::DuplicateConstant { line, col, name });
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        if wrapped {
            self.expect_sym("]")?;
        }

        let mut spec = ContractSpec {
            nf_name: nf_name.to_string(),
            constants: ConstantBindings::new(),
            static_assertions: Vec::new(),
            ingress: None,
            egress: None,
        };
        let mut seen_static = false;
        while self.peek().tok != Tok::Eof {
            let (kw, line, col) = self.expect_ident()?;
            match kw.as_str() {
                "pre" | "post" => {
                    let ingress = kw == "pre";
                    let slot = if ingress { &spec.ingress } else { &spec.egress };
                    if slot.is_some() {
                        return Err(ElaborationError::Syntax { line, col, msg: format!("duplicate `{kw}` block") });
                    }
                    let block = self.parse_phase(ingress)?;
                    if ingress {
                        spec.ingress = Some(block);
                    } else {
                        spec.egress = Some(block);
                    }
                }
                "static" if !seen_static => {
                    seen_static = true;
                    self.expect_sym(":")?;
                    self.expect_sym("[")?;
                    loop {
                        spec.static_assertions.push(self.parse_static()?);
                        if !self.eat_sym(",") || self.is_sym("]") {
                            break;
                        }
                    }
                    self.expect_sym("]")?;
                }
                other => {
                    return Err(ElaborationError::Syntax {
                        line,
                        col,
                        msg: format!("unexpected `{other}`; expected `pre`, `post` or `static`"),
                    })
                }
            }
        }
        spec.constants = self.constants;
        Ok(spec)
    }

    fn parse_phase(&mut self, ingress: bool) -> PResult<PhaseSpec> {
        self.expect_sym("{")?;
        let mut order = None;
        let mut checks = None;
        while !self.is_sym("}") {
            let (key, line, col) = self.expect_ident()?;
            self.expect_sym(":")?;
            match key.as_str() {
                "input" if order.is_none() && checks.is_none() => {
                    self.expect_ident()?;
                }
                "order" if order.is_none() => order = Some(self.parse_order()?),
                "checks" if checks.is_none() => checks = Some(self.parse_checks(ingress)?),
                _ => {
                    return Err(ElaborationError::Syntax {
                        line,
                        col,
                        msg: format!("unexpected key `{key}`; expected `input`, `order` or `checks`"),
                    })
                }
            }
            if !self.eat_sym(",") {
                break;
            }
        }
        let close = self.peek().clone();
        self.expect_sym("}")?;
        let order = order.ok_or(ElaborationError::Syntax { line: close.line, col: close.col, msg: "missing `order`".into() })?;
        Ok(PhaseSpec { order, checks: checks.unwrap_or_default() })
    }

    fn header(&self, name: &str, line: usize, col: usize) -> PResult<HeaderId> {
        self.registry
            .lookup(name)
            .ok_or_else(|| ElaborationError::UnknownHeader { line, col, name: name.to_string() })
    }

    fn parse_hdr(&mut self) -> PResult<OrderElem> {
        let (name, line, col) = self.expect_ident()?;
        let header = self.header(&name, line, col)?;
        if !self.eat_sym("<") {
            return Ok(OrderElem::new(header));
        }
        let param = if self.eat_sym("...") {
            // Elided parameter: the header's declared enclosing protocol.
            self.registry.get(header).and_then(|d| d.parameter).ok_or(ElaborationError::Syntax {
                line,
                col,
                msg: format!("{name} has no parameter to elide"),
            })?
        } else {
            let (p, pl, pc) = self.expect_ident()?;
            self.header(&p, pl, pc)?
        };
        self.expect_sym(">")?;
        Ok(OrderElem::with_param(header, param))
    }

    fn parse_order(&mut self) -> PResult<OrderSpec> {
        self.expect_sym("[")?;
        let mut elems = vec![self.parse_hdr()?];
        while self.eat_sym("=>") {
            elems.push(self.parse_hdr()?);
        }
        self.expect_sym("]")?;
        Ok(OrderSpec::new(elems).expect("at least one element"))
    }

    fn parse_checks(&mut self, ingress: bool) -> PResult<Vec<Check>> {
        self.expect_sym("[")?;
        let mut out = Vec::new();
        while !self.is_sym("]") {
            out.push(self.parse_check(ingress)?);
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym("]")?;
        Ok(out)
    }

    fn parse_op(&mut self) -> PResult<Comparator> {
        let t = self.peek().clone();
        let op = match &t.tok {
            Tok::Sym(s) => Comparator::parse(s),
            Tok::Ident(s) => Comparator::parse(s),
            _ => None,
        };
        match op {
            Some(op) => {
                self.bump();
                Ok(op)
            }
            None => self.err(format!("expected a comparator, found {}", Self::describe(&t.tok))),
        }
    }

    fn parse_check(&mut self, ingress: bool) -> PResult<Check> {
        self.expect_sym("(")?;
        let lhs = self.parse_fieldref(Source::CurrentPacket)?;
        self.expect_sym(",")?;
        let op = self.parse_op()?;
        self.expect_sym(",")?;
        let rhs_source = if ingress { Source::CurrentPacket } else { Source::IngressSnapshot };
        let mut rhs = self.parse_term(rhs_source)?;
        loop {
            let op = if self.eat_sym("+") {
                ArithOp::Add
            } else if self.eat_sym("-") {
                ArithOp::Sub
            } else {
                break;
            };
            rhs = Operand::Arith(Box::new(rhs), op, Box::new(self.parse_term(rhs_source)?));
        }
        self.expect_sym(")")?;
        Ok(Check { lhs, op, rhs })
    }

    fn parse_term(&mut self, source: Source) -> PResult<Operand> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Int(v) => {
                self.bump();
                Ok(Operand::Literal(*v))
            }
            Tok::Sym(".") => Ok(Operand::Field(self.parse_fieldref(source)?)),
            Tok::Ident(name) if *self.peek_at(1) == Tok::Sym("[") => {
                let _ = name;
                Ok(Operand::Field(self.parse_fieldref(source)?))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.constants.get(name).is_none() {
                    return Err(ElaborationError::UnboundConstant { line: t.line, col: t.col, name: name.clone() });
                }
                Ok(Operand::Constant(name.clone()))
            }
            other => self.err(format!("expected an operand, found {}", Self::describe(other))),
        }
    }

    fn parse_fieldref(&mut self, source: Source) -> PResult<FieldRef> {
        self.eat_sym(".");
        let (accessor, line, col) = self.expect_ident()?;
        self.expect_sym("[")?;
        let header = self.parse_hdr()?;
        let occurrence = if self.eat_sym("#") { self.expect_int()? as usize } else { 0 };
        self.expect_sym("]")?;
        let d = self.registry.get(header.header).expect("looked up by parse_hdr");
        if d.accessor(&accessor).is_none() {
            return Err(ElaborationError::UnknownAccessor { line, col, header: header.header, accessor });
        }
        Ok(FieldRef { accessor, header, occurrence, source })
    }

    fn parse_static(&mut self) -> PResult<StaticAssertion> {
        let lhs = self.parse_sum()?;
        let op = self.parse_op()?;
        let rhs = self.parse_sum()?;
        Ok(StaticAssertion { lhs, op, rhs })
    }

    fn parse_sum(&mut self) -> PResult<StaticTerm> {
        let mut acc = self.parse_prod()?;
        loop {
            if self.eat_sym("+") {
                acc = StaticTerm::Add(Box::new(acc), Box::new(self.parse_prod()?));
            } else if self.eat_sym("-") {
                acc = StaticTerm::Sub(Box::new(acc), Box::new(self.parse_prod()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn parse_prod(&mut self) -> PResult<StaticTerm> {
        let mut acc = self.parse_atom()?;
        while self.eat_sym("*") {
            acc = StaticTerm::Mul(Box::new(acc), Box::new(self.parse_atom()?));
        }
        Ok(acc)
    }

    fn parse_atom(&mut self) -> PResult<StaticTerm> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Int(v) => {
                self.bump();
                Ok(StaticTerm::Int(*v))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.constants.get(name).is_none() {
                    return Err(ElaborationError::UnboundConstant { line: t.line, col: t.col, name: name.clone() });
                }
                Ok(StaticTerm::Name(name.clone()))
            }
            Tok::Sym("(") => {
                self.bump();
                let inner = self.parse_sum()?;
                self.expect_sym(")")?;
                Ok(inner)
            }
            other => self.err(format!("expected a constant expression, found {}", Self::describe(other))),
        }
    }
}

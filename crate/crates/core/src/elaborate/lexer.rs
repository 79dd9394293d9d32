// SPDX-License-Identifier: Apache-2.0

use super::ElaborationError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum Tok {
    Ident(String),
    Int(u64),
    /// Punctuation and operators, spelled as in the source.
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(super) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const SYMBOLS: &[&str] = &[
    "...", "=>", "==", "<=", ">=", "(", ")", "[", "]", "{", "}", ",", ":", ".", "<", ">", "=", "+", "-", "*", "#",
];

pub(super) fn tokenize(src: &str) -> Result<Vec<Token>, ElaborationError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut rest = src;
    while let Some(c) = rest.chars().next() {
        if c == '\n' {
            line += 1;
            col = 1;
            rest = &rest[1..];
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            rest = &rest[c.len_utf8()..];
            continue;
        }
        if rest.starts_with("//") {
            let end = rest.find('\n').unwrap_or(rest.len());
            rest = &rest[end..];
            continue;
        }
        let (tok, len) = if c.is_ascii_alphabetic() || c == '_' {
            let len = rest.find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_')).unwrap_or(rest.len());
            (Tok::Ident(rest[..len].to_string()), len)
        } else if c.is_ascii_digit() {
            let (digits, radix, skip) = match rest.strip_prefix("0x").or_else(|| rest.strip_prefix("0X")) {
                Some(hex) => (hex, 16, 2),
                None => (rest, 10, 0),
            };
            let len = digits.find(|ch: char| !ch.is_digit(radix)).unwrap_or(digits.len());
            let value = u64::from_str_radix(&digits[..len], radix).map_err(|e| ElaborationError::Syntax {
                line,
                col,
                msg: format!("bad integer literal: {e}"),
            })?;
            (Tok::Int(value), skip + len)
        } else {
            let sym = SYMBOLS.iter().find(|s| rest.starts_with(**s)).ok_or_else(|| ElaborationError::Syntax {
                line,
                col,
                msg: format!("unexpected character {c:?}"),
            })?;
            // `Hdr<Param>=>Next` closes the parameter before the arrow.
            let sym = if *sym == ">=" && rest[1..].starts_with("=>") { ">" } else { sym };
            (Tok::Sym(sym), sym.len())
        };
        out.push(Token { tok, line, col });
        col += len;
        rest = &rest[len..];
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

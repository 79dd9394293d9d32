// SPDX-License-Identifier: Apache-2.0

//! Values produced by header field accessors.

use std::cmp::Ordering;
use std::fmt;
use std::net::Ipv6Addr;

use serde::{Serialize, Serializer};

use crate::packet::MacAddr;

/// Shape of the value an accessor yields. Byte-like kinds admit only
/// equality comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Int,
    Mac,
    Ipv6,
    Bytes,
}

impl ValueKind {
    pub fn is_integer(self) -> bool {
        self == ValueKind::Int
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Int => "integer",
            ValueKind::Mac => "MAC address",
            ValueKind::Ipv6 => "IPv6 address",
            ValueKind::Bytes => "byte sequence",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    /// Integers of every wire width, widened to 64 bits.
    Int(u64),
    Mac(MacAddr),
    Ipv6(Ipv6Addr),
    Bytes(Vec<u8>),
}

impl Value {
    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Int(_) => ValueKind::Int,
            Value::Mac(_) => ValueKind::Mac,
            Value::Ipv6(_) => ValueKind::Ipv6,
            Value::Bytes(_) => ValueKind::Bytes,
        }
    }

    pub fn as_int(&self) -> Option<u64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    fn raw(&self) -> Option<Vec<u8>> {
        match self {
            Value::Int(_) => None,
            Value::Mac(m) => Some(m.0.to_vec()),
            Value::Ipv6(a) => Some(a.octets().to_vec()),
            Value::Bytes(b) => Some(b.clone()),
        }
    }

    /// Numeric order for integers; byte values are only comparable for
    /// equality, so `None` is returned for any ordering between them that is
    /// not `Equal`-decidable, and for integer/bytes mixes.
    pub fn equals(&self, other: &Value) -> Option<bool> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Some(a == b),
            (Value::Int(_), _) | (_, Value::Int(_)) => None,
            _ => Some(self.raw() == other.raw()),
        }
    }

    pub fn order(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Mac(m) => write!(f, "{m}"),
            Value::Ipv6(a) => write!(f, "{a}"),
            Value::Bytes(b) => {
                f.write_str("0x")?;
                for byte in b.iter().take(32) {
                    write!(f, "{byte:02x}")?;
                }
                if b.len() > 32 {
                    write!(f, "..({} bytes)", b.len())?;
                }
                Ok(())
            }
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Int(v) => s.serialize_u64(*v),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

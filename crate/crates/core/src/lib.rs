// SPDX-License-Identifier: Apache-2.0

//! Ingress/egress contracts for packet-processing network functions.
//!
//! Headers are typed and registered with their legal predecessors. A contract
//! names the header order a packet must have and field comparisons that must
//! hold before and after the NF runs. Egress checks can read an immutable
//! snapshot of the ingress packet.

pub mod contract;
pub mod elaborate;
pub mod harness;
pub mod nf;
pub mod packet;
pub mod registry;
pub mod static_check;
pub mod value;

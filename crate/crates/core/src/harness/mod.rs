// SPDX-License-Identifier: Apache-2.0

//! Capture files, traffic generation, the packet loop and benchmarking.

pub mod bench;
pub mod generator;
pub mod pcap;
pub mod pipeline;

pub use bench::{bench, BenchReport, Stat};
pub use generator::{generate, GeneratorError, GeneratorSpec, PayloadLen, Template};
pub use pcap::{read_file, read_pcap, write_file, write_pcap, PcapError, Record};
pub use pipeline::{DropRecord, PacketOutcome, Pipeline, Policy, Summary, Timings};

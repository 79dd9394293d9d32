// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

fn netcontract(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netcontract")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.pcap"), dir.path().join("b.pcap"), dir.path().join("c.pcap"));
    for (p, seed) in [(&a, "42"), (&b, "42"), (&c, "43")] {
        let o = netcontract(&["gen", "--count", "20", "--seed", seed, "--out", path(p)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b, c) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), std::fs::read(c).unwrap());
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(&a[..4], &0xa1b2c3d4u32.to_le_bytes());
}

#[test]
fn clean_run_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.pcap");
    let o = netcontract(&["run", "--nf", "mtu-too-big", "--count", "100", "--out", path(&out)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("violations=0"), "{text}");
    assert!(out.exists());
}

#[test]
fn violations_exit_one_with_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let o = netcontract(&[
        "run",
        "--nf",
        "mtu-too-big:no-ipv6-swap",
        "--count",
        "10",
        "--format",
        "json",
        "--report",
        path(&report),
    ]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(report).unwrap()).unwrap();
    assert_eq!(v["packets_in"], 10);
    assert_eq!(v["packets_dropped"], 10);
    assert_eq!(v["violations"].as_array().unwrap().len(), 20);
    let first = &v["violations"][0];
    for key in ["nf", "phase", "check_index", "lhs", "op", "rhs", "packet_index"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn prod_mode_reports_nothing() {
    let o = netcontract(&["run", "--nf", "mtu-too-big:no-ipv6-swap", "--count", "10", "--mode", "prod"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn abort_policy_exits_nonzero() {
    let o = netcontract(&["run", "--nf", "mtu-too-big:no-eth-swap", "--policy", "abort", "--count", "5"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pcap");
    std::fs::write(&bad, 0xdeadbeefu32.to_le_bytes().repeat(6)).unwrap();
    let contract = dir.path().join("c.txt");
    std::fs::write(&contract, "check() pre { order: [EthHdr=>TcpHdr<Ipv6Hdr>], checks: [] }").unwrap();
    for args in [
        vec!["run", "--nf", "no-such-nf"],
        vec!["run", "--nf", "mtu-too-big", "--in", path(&bad)],
        vec!["run", "--nf", "mtu-too-big", "--in", "/nonexistent/x.pcap"],
        vec!["run", "--nf", "mtu-too-big", "--contract", path(&contract)],
        vec!["run", "--nf", "mtu-too-big", "--template", "udp4"],
        vec!["gen", "--payload-len", "5", "--out", "/dev/null"],
    ] {
        let o = netcontract(&args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn bad_contract_stops_before_output() {
    let dir = tempfile::tempdir().unwrap();
    let contract = dir.path().join("c.txt");
    std::fs::write(&contract, "check() pre { order: [EthHdr=>Ipv6Hdr], checks: [(ttl[Ipv6Hdr], ==, 1)] }").unwrap();
    let out = dir.path().join("out.pcap");
    let o = netcontract(&["run", "--nf", "mtu-too-big", "--contract", path(&contract), "--out", path(&out)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("ttl"));
    assert!(!out.exists());
}

#[test]
fn run_reads_generated_capture() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pcap");
    let out = dir.path().join("out.pcap");
    let o = netcontract(&["gen", "--template", "srv6", "--payload-len", "40..200", "--count", "30", "--out", path(&input)]);
    assert_eq!(code(&o), 0);
    let o = netcontract(&["run", "--nf", "srv6-change-pkt", "--in", path(&input), "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let (a, b) = (std::fs::read(input).unwrap(), std::fs::read(out).unwrap());
    assert_eq!(b.len(), a.len() + 30 * 16);
}

#[test]
fn explain_prints_contract() {
    let o = netcontract(&["explain", "--nf", "mtu-too-big"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for needle in ["EthHdr", "Icmpv6PktTooBig", "payload_len[Ipv6Hdr]", "1240"] {
        assert!(text.contains(needle), "{needle} missing from\n{text}");
    }
}

#[test]
fn bench_emits_json() {
    let o = netcontract(&["bench", "--nf", "mtu-too-big", "--count", "200", "--repetitions", "3", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["repetitions"], 3);
    for phase in ["ingress_contract", "transform", "egress_contract"] {
        assert!(v[phase]["mean_ns"].is_number() && v[phase]["stddev_ns"].is_number(), "{phase}");
    }
}

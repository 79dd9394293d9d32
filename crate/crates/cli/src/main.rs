// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use netcontract::contract::BuildMode;
use netcontract::harness::{self, GeneratorSpec, PayloadLen, Pipeline, Policy, Record, Template};
use netcontract::nf::{self, NfDefinition};
use netcontract::registry::HeaderRegistry;

#[derive(Parser)]
#[command(name = "netcontract", version, about = "Run network functions with ingress/egress contracts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run packets through an NF and report contract violations.
    Run(RunArgs),
    /// Write a synthetic capture.
    Gen(GenArgs),
    /// Time each pipeline phase with contracts on and off.
    Bench(BenchArgs),
    /// Print an NF's elaborated contract.
    Explain(ExplainArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Dev,
    Prod,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Drop,
    Continue,
    Abort,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct NfArgs {
    /// Network function name.
    #[arg(long)]
    nf: String,
    /// Replace the NF's contract with the one in this file.
    #[arg(long, value_name = "FILE")]
    contract: Option<PathBuf>,
}

#[derive(Args)]
struct SourceArgs {
    /// Input capture; packets are generated when absent.
    #[arg(long = "in", value_name = "PCAP")]
    input: Option<PathBuf>,
    #[command(flatten)]
    gen: GenOpts,
}

#[derive(Args)]
struct GenOpts {
    /// tcp6 or srv6.
    #[arg(long, default_value = "tcp6")]
    template: String,
    /// IPv6 payload length, N or A..B.
    #[arg(long, default_value = "1300")]
    payload_len: String,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    nf: NfArgs,
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, value_name = "PCAP")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dev")]
    mode: Mode,
    #[arg(long, value_enum, default_value = "drop")]
    policy: PolicyArg,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    gen: GenOpts,
    #[arg(long, value_name = "PCAP")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    nf: NfArgs,
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 10)]
    repetitions: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    nf: NfArgs,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn config<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure { code: 2, error: e.into() }
}

fn load_nf(args: &NfArgs, registry: &HeaderRegistry) -> Result<NfDefinition> {
    let nf = nf::lookup(&args.nf, registry)?;
    match &args.contract {
        None => Ok(nf),
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading contract {}", path.display()))?;
            Ok(nf.with_contract_text(&text, registry)?)
        }
    }
}

fn load_source(src: &SourceArgs) -> Result<Vec<Record>> {
    match &src.input {
        Some(path) => harness::read_file(path).with_context(|| format!("reading {}", path.display())),
        None => Ok(harness::generate(&gen_spec(&src.gen)?)?),
    }
}

fn gen_spec(g: &GenOpts) -> Result<GeneratorSpec> {
    Ok(GeneratorSpec {
        count: g.count,
        template: g.template.parse::<Template>()?,
        payload_len: g.payload_len.parse::<PayloadLen>()?,
        seed: g.seed,
    })
}

fn emit(report: &Option<PathBuf>, body: &str) -> Result<()> {
    match report {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> Result<u8, Failure> {
    let registry = Arc::new(HeaderRegistry::standard());
    // Elaboration comes first so a bad contract stops the run before any I/O.
    let nf = load_nf(&args.nf, &registry).map_err(config)?;
    let records = load_source(&args.source).map_err(config)?;
    let mode = match args.mode {
        Mode::Dev => BuildMode::Development,
        Mode::Prod => BuildMode::Production,
    };
    let policy = match args.policy {
        PolicyArg::Drop => Policy::Drop,
        PolicyArg::Continue => Policy::Continue,
        PolicyArg::Abort => Policy::Abort,
    };
    let pipeline = Pipeline::new(nf, registry, mode, policy);
    let (out, summary) = pipeline.run(records);
    if let Some(path) = &args.out {
        harness::write_file(path, &out).with_context(|| format!("writing {}", path.display())).map_err(config)?;
    }
    let body = match args.format {
        Format::Text => summary.render_text(),
        Format::Json => serde_json::to_string_pretty(&summary.to_json()).map_err(config)? + "\n",
    };
    emit(&args.report, &body).map_err(config)?;
    Ok(u8::from(!summary.violations.is_empty()))
}

fn gen(args: GenArgs) -> Result<u8, Failure> {
    let records = harness::generate(&gen_spec(&args.gen).map_err(config)?).map_err(config)?;
    harness::write_file(&args.out, &records)
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(config)?;
    Ok(0)
}

fn bench(args: BenchArgs) -> Result<u8, Failure> {
    let registry = Arc::new(HeaderRegistry::standard());
    let nf = load_nf(&args.nf, &registry).map_err(config)?;
    let records = load_source(&args.source).map_err(config)?;
    let report = harness::bench(&nf, registry, &records, args.repetitions);
    let body = match args.format {
        Format::Text => report.render_text(),
        Format::Json => serde_json::to_string_pretty(&report.to_json()).map_err(config)? + "\n",
    };
    emit(&args.report, &body).map_err(config)?;
    Ok(0)
}

fn explain(args: ExplainArgs) -> Result<u8, Failure> {
    let registry = HeaderRegistry::standard();
    let nf = load_nf(&args.nf, &registry).map_err(config)?;
    match &nf.contract {
        Some(c) => print!("{c}"),
        None => println!("nf {} has no contract", nf.name),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Gen(a) => gen(a),
        Command::Bench(a) => bench(a),
        Command::Explain(a) => explain(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

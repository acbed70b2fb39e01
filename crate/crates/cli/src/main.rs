//! `dhac`: run programs on simulated approximate hardware and check the
//! results with the residue and forward-backward checks.
//!
//! Exit codes: 0 for success or a negative verdict, 2 when a check flags the
//! result, 3 when a residue check could not evaluate any round, 1 on error.

mod commands;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "dhac", version, about = "Detect dishonest approximate computing with residue and forward-backward checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a program on a chosen arithmetic backend and write its trace.
    Run(RunArgs),
    /// Write a built-in benchmark program, and optionally sampled inputs.
    Builtin(BuiltinArgs),
    /// Check claimed integer results with the residual class check.
    Rcc(RccArgs),
    /// Forward-backward check: instrument a program or judge a trace.
    #[command(subcommand)]
    Fbc(FbcCommand),
    /// Run the detection experiments of a scenario config and emit the CSV report.
    Bench(BenchArgs),
    /// Re-threshold recorded sentinel distances over a list of deltas.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Program file (JSON).
    #[arg(long)]
    program: PathBuf,
    /// JSON array of input values.
    #[arg(long)]
    inputs: PathBuf,
    /// Backend description (JSON); overrides the unit flags.
    #[arg(long, conflicts_with_all = ["adder", "multiplier", "fp_trunc"])]
    backend: Option<PathBuf>,
    /// Approximate adder, e.g. loa:4, trunc:6, seg:4.
    #[arg(long)]
    adder: Option<String>,
    /// Approximate multiplier, e.g. trunc:4, broken:4, log.
    #[arg(long)]
    multiplier: Option<String>,
    /// Mantissa bits truncated from every float operand.
    #[arg(long)]
    fp_trunc: Option<u8>,
    /// Where to write the trace (JSON); printed to stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BuiltinArgs {
    /// Program name with optional parameters, e.g. `euler:order=3`, `fir`, `conv`.
    spec: String,
    /// Where to write the program (JSON); printed to stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write one input vector drawn from the program's domain.
    #[arg(long)]
    inputs_out: Option<PathBuf>,
    /// Seed for the sampled inputs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct RccArgs {
    #[arg(long)]
    program: PathBuf,
    #[arg(long)]
    inputs: PathBuf,
    /// Claimed outputs: comma-separated integers, or `@file` holding a JSON
    /// array or a trace.
    #[arg(long, allow_hyphen_values = true)]
    claimed: String,
    /// Comma-separated moduli, one check round each.
    #[arg(long, default_value = "3,5,7")]
    moduli: String,
    /// Where to write the verdict (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum FbcCommand {
    /// Attach sentinel branches to a floating-point program.
    Instrument(InstrumentArgs),
    /// Judge a trace of an instrumented program.
    Judge(JudgeArgs),
}

#[derive(Debug, Args)]
struct InstrumentArgs {
    #[arg(long)]
    program: PathBuf,
    /// `auto` or comma-separated node ids, one per sentinel kind.
    #[arg(long, default_value = "auto")]
    sites: String,
    /// Comma-separated sentinel kinds: add, mul, tan.
    #[arg(long, default_value = "add,mul,tan")]
    kinds: String,
    /// Forward steps per sentinel.
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = dhac_core::fbc::DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the instrumented program (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct JudgeArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    instrumented: PathBuf,
    /// Where to write the verdict (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Scenario config (TOML); the built-in defaults if absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the trial count, e.g. `--quick 500`.
    #[arg(long)]
    quick: Option<usize>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Where to write the CSV report; printed to stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also print the human-readable table.
    #[arg(long)]
    table: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Comma-separated, strictly decreasing thresholds.
    #[arg(long, default_value = "1e-3,1e-6,1e-8,1e-10,1e-12,1e-13,1e-14,1e-15,1e-16")]
    deltas: String,
    /// Where to write the curve (CSV); printed to stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

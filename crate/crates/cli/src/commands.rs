use super::{BenchArgs, BuiltinArgs, Command, ExperimentArgs, FbcCommand, InstrumentArgs, JudgeArgs, RccArgs, RunArgs, SweepArgs};
use anyhow::{bail, Context, Result};
use dhac_core::approx::{AdderModel, ArithBackend, FpTruncModel, MultiplierModel};
use dhac_core::fbc::{choose_sites, instrument, judge, make_sentinel, InstrumentedGraph, SentinelKind};
use dhac_core::ir::{evaluate, parse_inputs, parse_program, BuiltinSpec, DFGraph, NodeId, Scalar, Trace};
use dhac_core::rcc::{rcc_check, ModuleSet};
use dhac_core::rng::substream;
use dhac_core::scenario::{run_bench, sweep_threshold, ScenarioConfig};
use dhac_core::Judgement;
use serde::Serialize;
use std::fs;
use std::path::Path;

const EXIT_OK: u8 = 0;
const EXIT_POSITIVE: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

pub fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Run(a) => run(a),
        Command::Builtin(a) => builtin(a),
        Command::Rcc(a) => rcc(a),
        Command::Fbc(FbcCommand::Instrument(a)) => fbc_instrument(a),
        Command::Fbc(FbcCommand::Judge(a)) => fbc_judge(a),
        Command::Bench(a) => bench(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `text` to `out`, or prints it when no path is given.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_program(path: &Path) -> Result<DFGraph> {
    parse_program(&read(path)?).with_context(|| format!("parsing program {}", path.display()))
}

fn load_inputs(path: &Path, graph: &DFGraph) -> Result<Vec<Scalar>> {
    parse_inputs(&read(path)?, graph).with_context(|| format!("parsing inputs {}", path.display()))
}

fn judgement_code(j: Judgement) -> u8 {
    match j {
        Judgement::Negative => EXIT_OK,
        Judgement::Positive => EXIT_POSITIVE,
        Judgement::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

fn run_backend(a: &RunArgs) -> Result<ArithBackend> {
    if let Some(path) = &a.backend {
        return serde_json::from_str(&read(path)?).with_context(|| format!("parsing backend {}", path.display()));
    }
    let adder = match &a.adder {
        Some(s) => s.parse()?,
        None => AdderModel::Exact,
    };
    let multiplier = match &a.multiplier {
        Some(s) => s.parse()?,
        None => MultiplierModel::Exact,
    };
    let fp = FpTruncModel::new(a.fp_trunc.unwrap_or(0))?;
    if adder.is_exact() && multiplier.is_exact() && fp.truncated_bits == 0 {
        return Ok(ArithBackend::exact());
    }
    Ok(ArithBackend::approximate(adder, multiplier, fp)?)
}

fn run(a: RunArgs) -> Result<u8> {
    let graph = load_program(&a.program)?;
    let inputs = load_inputs(&a.inputs, &graph)?;
    let backend = run_backend(&a)?;
    let trace = evaluate(&graph, &inputs, &backend)?;
    match &a.out {
        Some(p) => {
            write(p, &to_json(&trace)?)?;
            println!("{} on {backend}: outputs [{}]", graph.name(), join(&trace.outputs));
        }
        None => print!("{}", to_json(&trace)?),
    }
    Ok(EXIT_OK)
}

fn builtin(a: BuiltinArgs) -> Result<u8> {
    let spec: BuiltinSpec = a.spec.parse()?;
    let graph = spec.build()?;
    emit(a.out.as_deref(), &to_json(&graph)?)?;
    if let Some(p) = &a.inputs_out {
        let inputs = spec.sample_inputs(&mut substream(a.seed, "cli/inputs", 0));
        write(p, &to_json(&inputs)?)?;
    }
    if a.out.is_some() {
        println!("{spec}: {} nodes, {} inputs, {} outputs", graph.len(), graph.inputs().len(), graph.outputs().len());
    }
    Ok(EXIT_OK)
}

/// `1,2,-3`, or `@file` with a JSON array or a trace.
fn parse_claimed(arg: &str) -> Result<Vec<i64>> {
    let scalars_to_ints = |v: Vec<Scalar>| -> Result<Vec<i64>> {
        v.into_iter()
            .map(|s| s.as_int().map(i64::from).context("claimed outputs must be integers"))
            .collect()
    };
    if let Some(path) = arg.strip_prefix('@') {
        let text = read(Path::new(path))?;
        if let Ok(v) = serde_json::from_str::<Vec<i64>>(&text) {
            return Ok(v);
        }
        let trace: Trace = serde_json::from_str(&text).with_context(|| format!("{path} is neither an array nor a trace"))?;
        return scalars_to_ints(trace.outputs);
    }
    arg.split(',')
        .map(|p| p.trim().parse::<i64>().with_context(|| format!("bad claimed value {p:?}")))
        .collect()
}

fn rcc(a: RccArgs) -> Result<u8> {
    let graph = load_program(&a.program)?;
    let inputs: Vec<i64> = load_inputs(&a.inputs, &graph)?
        .into_iter()
        .map(|s| s.as_int().map(i64::from).context("residue checks need integer inputs"))
        .collect::<Result<_>>()?;
    let claimed = parse_claimed(&a.claimed)?;
    let moduli: ModuleSet = a.moduli.parse()?;
    let verdict = rcc_check(&graph, &inputs, &claimed, &moduli)?;
    if let Some(p) = &a.out {
        write(p, &to_json(&verdict)?)?;
    }
    let detail = match verdict.judgement {
        Judgement::Positive => format!(
            "mismatch at round {} (mod {})",
            verdict.failed_round.unwrap_or_default(),
            verdict.failed_modulus().unwrap_or_default()
        ),
        Judgement::Negative => format!(
            "{} of {} rounds matched, moduli {moduli}",
            verdict.rounds.len() - verdict.skipped(),
            verdict.rounds.len()
        ),
        Judgement::Inconclusive => format!("all {} rounds skipped on non-invertible divisors", verdict.rounds.len()),
    };
    println!("RCC {}: {detail}", verdict.judgement);
    Ok(judgement_code(verdict.judgement))
}

fn parse_kinds(s: &str) -> Result<Vec<SentinelKind>> {
    let kinds = s.split(',').map(|k| k.parse::<SentinelKind>()).collect::<Result<Vec<_>, _>>()?;
    if kinds.is_empty() {
        bail!("no sentinel kinds given");
    }
    Ok(kinds)
}

fn fbc_instrument(a: InstrumentArgs) -> Result<u8> {
    let graph = load_program(&a.program)?;
    let kinds = parse_kinds(&a.kinds)?;
    let sites: Vec<NodeId> = if a.sites.trim() == "auto" {
        choose_sites(&graph, kinds.len(), &mut substream(a.seed, "cli/fbc-sites", 0))?
    } else {
        a.sites
            .split(',')
            .map(|p| p.trim().parse::<u32>().map(NodeId).with_context(|| format!("bad site id {p:?}")))
            .collect::<Result<_>>()?
    };
    if sites.len() != kinds.len() {
        bail!("{} sites given for {} sentinel kinds", sites.len(), kinds.len());
    }
    let mut rng = substream(a.seed, "cli/fbc-operands", 0);
    let sentinels = kinds
        .iter()
        .zip(&sites)
        .map(|(&kind, &site)| make_sentinel(&graph, kind, a.n, site, a.delta, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    let ig = instrument(&graph, sentinels)?;
    write(&a.out, &to_json(&ig)?)?;
    let placed: Vec<String> = ig.sentinels.iter().map(|s| format!("{}@{}", s.kind, s.site)).collect();
    println!("instrumented {} with {} sentinel(s): {}", graph.name(), placed.len(), placed.join(", "));
    Ok(EXIT_OK)
}

fn fbc_judge(a: JudgeArgs) -> Result<u8> {
    let trace: Trace = serde_json::from_str(&read(&a.trace)?).with_context(|| format!("parsing trace {}", a.trace.display()))?;
    let ig: InstrumentedGraph = serde_json::from_str(&read(&a.instrumented)?)
        .with_context(|| format!("parsing instrumented program {}", a.instrumented.display()))?;
    let verdict = judge(&trace, &ig)?;
    if let Some(p) = &a.out {
        write(p, &to_json(&verdict)?)?;
    }
    let worst = verdict.sentinels.iter().map(|s| s.distance).fold(0.0, f64::max);
    println!(
        "FBC {}: {} of {} sentinel(s) over delta, largest distance {worst:e}",
        verdict.judgement,
        verdict.positives(),
        verdict.sentinels.len()
    );
    Ok(judgement_code(verdict.judgement))
}

fn load_config(e: &ExperimentArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &e.config {
        Some(p) => ScenarioConfig::from_toml(&read(p)?).with_context(|| format!("loading config {}", p.display()))?,
        None => ScenarioConfig::default(),
    };
    if let Some(n) = e.quick {
        cfg = cfg.with_trials(n);
    }
    if let Some(s) = e.seed {
        cfg = cfg.with_seed(s);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn bench(a: BenchArgs) -> Result<u8> {
    let cfg = load_config(&a.experiment)?;
    let report = run_bench(&cfg, a.experiment.jobs)?;
    if a.table {
        print!("{}", report.to_table());
    }
    emit(a.out.as_deref(), &report.to_csv())?;
    if let Some(p) = &a.out {
        println!("bench: {} rows, {} trials per cell, seed {} -> {}", report.rows.len(), cfg.trials, cfg.seed, p.display());
    }
    Ok(EXIT_OK)
}

fn sweep(a: SweepArgs) -> Result<u8> {
    let cfg = load_config(&a.experiment)?;
    let deltas = a
        .deltas
        .split(',')
        .map(|d| d.trim().parse::<f64>().with_context(|| format!("bad delta {d:?}")))
        .collect::<Result<Vec<_>>>()?;
    let curve = sweep_threshold(&cfg, &deltas, a.experiment.jobs)?;
    emit(a.out.as_deref(), &curve.to_csv())?;
    if let Some(p) = &a.out {
        print!("{}", curve.to_table());
        println!("sweep: {} deltas -> {}", deltas.len(), p.display());
    }
    Ok(EXIT_OK)
}

use super::report::{rate, ConfigEcho, DetectionReport, ReportRow};
use super::strategy::{differs, server_execute};
use super::{in_pool, ScenarioConfig, ScenarioError, ServerStrategy};
use crate::approx::{ArithBackend, Paradigm};
use crate::ir::{evaluate, Arithmetic, BuiltinSpec, DFGraph, Scalar};
use crate::rcc::{rcc_check, ModuleSet};
use crate::rng::substream;
use crate::Judgement;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Outcome of one RCC trial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RccTrialRecord {
    pub trial: u64,
    pub ground_truth: Paradigm,
    /// Approximate and different from the exact result.
    pub detectable: bool,
    /// Verdict on the server's claimed result.
    pub judgement: Judgement,
    pub failed_round: Option<usize>,
    /// Verdict on a paired exact execution of the same job.
    pub control: Judgement,
    pub control_failed_round: Option<usize>,
}

/// All trials of one program under one approximate backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RccCell {
    pub program: String,
    pub combo: String,
    pub rounds: usize,
    pub records: Vec<RccTrialRecord>,
}

/// Seed, trial count and server behaviour shared by every cell of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialPlan {
    pub seed: u64,
    pub trials: usize,
    pub strategy: ServerStrategy,
}

fn ints(xs: &[Scalar]) -> Vec<i64> {
    xs.iter().map(|x| x.as_int().expect("integer program") as i64).collect()
}

/// Runs `plan.trials` jobs of `spec` against a server whose approximate
/// paradigm is `appx`. Inputs depend only on the program and trial index, so
/// every backend sees the same jobs.
pub fn run_rcc_cell<A: Arithmetic + Sync + ?Sized>(
    spec: &BuiltinSpec,
    graph: &DFGraph,
    combo: &str,
    appx: &A,
    moduli: &ModuleSet,
    plan: &TrialPlan,
) -> Result<RccCell, ScenarioError> {
    if !spec.is_integer() {
        return Err(ScenarioError::Config(format!("{spec} is not an integer program")));
    }
    let program = spec.label();
    let input_label = format!("inputs/{program}");
    let draw_label = format!("dishonest/{program}/{combo}");
    let exact = ArithBackend::exact();
    let records = (0..plan.trials as u64)
        .into_par_iter()
        .map(|t| {
            let inputs = spec.sample_inputs(&mut substream(plan.seed, &input_label, t));
            let mut draw = substream(plan.seed, &draw_label, t);
            let run = server_execute(graph, &inputs, &plan.strategy, appx, t, &mut draw)?;
            let reference = evaluate(graph, &inputs, &exact)?;
            let x = ints(&inputs);
            let verdict = rcc_check(graph, &x, &ints(&run.trace.outputs), moduli)?;
            let control = rcc_check(graph, &x, &ints(&reference.outputs), moduli)?;
            Ok(RccTrialRecord {
                trial: t,
                ground_truth: run.ground_truth,
                detectable: run.ground_truth == Paradigm::Approximate && differs(&reference.outputs, &run.trace.outputs),
                judgement: verdict.judgement,
                failed_round: verdict.failed_round,
                control: control.judgement,
                control_failed_round: control.failed_round,
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    Ok(RccCell {
        program,
        combo: combo.to_string(),
        rounds: moduli.len(),
        records,
    })
}

/// Every (program, combo) cell of the config's RCC section, in config order.
pub fn run_rcc_cells(cfg: &ScenarioConfig, jobs: Option<usize>) -> Result<Vec<RccCell>, ScenarioError> {
    cfg.validate()?;
    let Some(section) = cfg.rcc_section() else {
        return Ok(Vec::new());
    };
    let plan = TrialPlan {
        seed: cfg.seed,
        trials: cfg.trials,
        strategy: cfg.strategy,
    };
    in_pool(jobs, || {
        let mut cells = Vec::new();
        for spec in &section.programs {
            let graph = spec.build()?;
            for combo in &section.combos {
                let backend = ArithBackend::integer(*combo)?;
                cells.push(run_rcc_cell(spec, &graph, &combo.to_string(), &backend, &section.moduli, &plan)?);
            }
        }
        Ok(cells)
    })
}

fn rows_for(program: &str, combo: &str, rounds: usize, records: &[&RccTrialRecord]) -> Vec<ReportRow> {
    let trials = records.len();
    let approximate = records.iter().filter(|r| r.ground_truth == Paradigm::Approximate).count();
    let detectable = records.iter().filter(|r| r.detectable).count();
    let by = |round: Option<usize>, j: usize| round.is_some_and(|f| f <= j);
    let row = |check: String, detected: usize, raw_rate, per_detectable_rate, fp, fn_| ReportRow {
        program: program.to_string(),
        combo: combo.to_string(),
        check,
        trials,
        approximate,
        detectable: Some(detectable),
        detected,
        raw_rate,
        per_detectable_rate,
        fp,
        fn_,
    };
    let detected_all = records.iter().filter(|r| r.judgement == Judgement::Positive && r.detectable).count();
    let fp_all = records.iter().filter(|r| r.control == Judgement::Positive).count();
    let mut rows = vec![row(
        "detectable".into(),
        detected_all,
        rate(detectable, trials),
        None,
        fp_all,
        detectable - detected_all,
    )];
    for j in 1..=rounds {
        let detected = records.iter().filter(|r| r.detectable && by(r.failed_round, j)).count();
        let fp = records.iter().filter(|r| by(r.control_failed_round, j)).count();
        rows.push(row(
            format!("round{j}"),
            detected,
            rate(detected, approximate),
            rate(detected, detectable),
            fp,
            detectable - detected,
        ));
    }
    rows
}

/// Report rows: per cell, then one pooled `all` block per program.
pub fn rcc_rows(cells: &[RccCell]) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    let mut programs: Vec<&str> = Vec::new();
    for c in cells {
        let recs: Vec<&RccTrialRecord> = c.records.iter().collect();
        rows.extend(rows_for(&c.program, &c.combo, c.rounds, &recs));
        if !programs.contains(&c.program.as_str()) {
            programs.push(&c.program);
        }
    }
    for p in programs {
        let group: Vec<&RccCell> = cells.iter().filter(|c| c.program == p).collect();
        if group.len() < 2 {
            continue;
        }
        let rounds = group.iter().map(|c| c.rounds).max().unwrap_or(0);
        let recs: Vec<&RccTrialRecord> = group.iter().flat_map(|c| &c.records).collect();
        rows.extend(rows_for(p, "all", rounds, &recs));
    }
    rows
}

pub(crate) fn rcc_echo(cfg: &ScenarioConfig) -> ConfigEcho {
    let section = cfg.rcc_section().unwrap_or_default();
    ConfigEcho {
        seed: cfg.seed,
        trials: cfg.trials,
        strategy: cfg.strategy,
        moduli: Some(section.moduli.to_string()),
        combos: section.combos.iter().map(|c| c.to_string()).collect(),
        delta: None,
        truncated_bits: Vec::new(),
        notes: vec![
            "integer units are parametric behavioural models (LOA, truncated, segmented-carry adders; truncated, broken-array, logarithmic multipliers), not gate-level netlists".into(),
            "fp counts positives on a paired exact run of every job".into(),
        ],
    }
}

/// RCC detection experiment for the config's `[rcc]` section.
pub fn run_rcc_trials(cfg: &ScenarioConfig, jobs: Option<usize>) -> Result<DetectionReport, ScenarioError> {
    let cells = run_rcc_cells(cfg, jobs)?;
    Ok(DetectionReport {
        echo: rcc_echo(cfg),
        rows: rcc_rows(&cells),
    })
}

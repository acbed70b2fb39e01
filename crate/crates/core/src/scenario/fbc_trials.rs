use super::report::{rate, ConfigEcho, DetectionReport, ReportRow, SweepCurve, SweepPoint};
use super::{in_pool, FbcSection, ScenarioConfig, ScenarioError, SiteSelection};
use crate::approx::{ArithBackend, Paradigm};
use crate::fbc::{check_site, make_sentinel, sentinel_roundtrip, site_candidates, SentinelKind};
use crate::ir::{census, evaluate_until, BuiltinSpec, DFGraph, NodeId};
use crate::rng::substream;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Server side of one trial under one truncation setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServerRun {
    pub truncated_bits: u8,
    pub ground_truth: Paradigm,
    /// Round-trip distance per sentinel kind, in config kind order.
    pub distances: Vec<f64>,
}

/// One FBC trial: a job, a site and one sentinel per kind at that site.
///
/// The control distances come from an exact execution; each server run
/// replays the same job, site and sentinel operands under one truncation
/// setting, so every distance can be re-thresholded later.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FbcTrialRecord {
    pub trial: u64,
    pub site: NodeId,
    pub control: Vec<f64>,
    pub runs: Vec<ServerRun>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FbcProgramRecords {
    pub program: String,
    pub kinds: Vec<SentinelKind>,
    pub truncated_bits: Vec<u8>,
    pub records: Vec<FbcTrialRecord>,
}

fn sites_for(graph: &DFGraph, sel: &SiteSelection) -> Result<Vec<NodeId>, ScenarioError> {
    let sites = match sel {
        SiteSelection::Auto => site_candidates(graph),
        SiteSelection::Nodes(ids) => {
            for &id in ids {
                check_site(graph, id)?;
            }
            ids.clone()
        }
    };
    if sites.is_empty() {
        return Err(ScenarioError::Config(format!("{} has no float sites for sentinels", graph.name())));
    }
    Ok(sites)
}

fn run_program(
    spec: &BuiltinSpec,
    section: &FbcSection,
    cfg: &ScenarioConfig,
) -> Result<FbcProgramRecords, ScenarioError> {
    let graph = spec.build()?;
    let sites = sites_for(&graph, &section.sites)?;
    let census_total = census(&graph).total;
    let program = spec.label();
    let backends = section
        .truncated_bits
        .iter()
        .map(|&b| ArithBackend::float(b))
        .collect::<Result<Vec<_>, _>>()?;
    let exact = ArithBackend::exact();
    let input_label = format!("fbc-inputs/{program}");
    let site_label = format!("fbc-site/{program}");
    let sentinel_labels: Vec<String> = section.kinds.iter().map(|k| format!("fbc-sentinel/{program}/{k}")).collect();
    let draw_labels: Vec<String> = section
        .truncated_bits
        .iter()
        .map(|b| format!("fbc-dishonest/{program}/trunc{b}"))
        .collect();

    let records = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let inputs = spec.sample_inputs(&mut substream(cfg.seed, &input_label, t));
            let site = sites[substream(cfg.seed, &site_label, t).gen_range(0..sites.len())];
            let sentinels = section
                .kinds
                .iter()
                .zip(&sentinel_labels)
                .map(|(&kind, label)| {
                    make_sentinel(&graph, kind, section.n, site, section.delta, &mut substream(cfg.seed, label, t))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let x_exact = evaluate_until(&graph, &inputs, &exact, site)?.to_f64();
            let control = sentinels
                .iter()
                .map(|s| Ok(sentinel_roundtrip(s, x_exact, &exact)?.distance))
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            let mut runs = Vec::with_capacity(backends.len());
            for ((backend, label), &bits) in backends.iter().zip(&draw_labels).zip(&section.truncated_bits) {
                let ground_truth = cfg.strategy.choose(t, census_total, &mut substream(cfg.seed, label, t));
                let distances = match ground_truth {
                    Paradigm::Accurate => control.clone(),
                    Paradigm::Approximate => {
                        let x = evaluate_until(&graph, &inputs, backend, site)?.to_f64();
                        sentinels
                            .iter()
                            .map(|s| Ok(sentinel_roundtrip(s, x, backend)?.distance))
                            .collect::<Result<Vec<_>, ScenarioError>>()?
                    }
                };
                runs.push(ServerRun {
                    truncated_bits: bits,
                    ground_truth,
                    distances,
                });
            }
            Ok(FbcTrialRecord {
                trial: t,
                site,
                control,
                runs,
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    Ok(FbcProgramRecords {
        program,
        kinds: section.kinds.clone(),
        truncated_bits: section.truncated_bits.clone(),
        records,
    })
}

/// Recorded distances for every program of the config's FBC section.
pub fn run_fbc_records(cfg: &ScenarioConfig, jobs: Option<usize>) -> Result<Vec<FbcProgramRecords>, ScenarioError> {
    cfg.validate()?;
    let Some(section) = cfg.fbc_section() else {
        return Ok(Vec::new());
    };
    in_pool(jobs, || section.programs.iter().map(|p| run_program(p, &section, cfg)).collect())
}

fn positive(distance: f64, delta: f64) -> bool {
    !(distance < delta)
}

/// Report rows at threshold `delta`: one per (program, truncation, kind).
pub fn fbc_rows(programs: &[FbcProgramRecords], delta: f64) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for p in programs {
        for (ri, &bits) in p.truncated_bits.iter().enumerate() {
            for (ki, kind) in p.kinds.iter().enumerate() {
                let trials = p.records.len();
                let approx: Vec<f64> = p
                    .records
                    .iter()
                    .map(|r| &r.runs[ri])
                    .filter(|r| r.ground_truth == Paradigm::Approximate)
                    .map(|r| r.distances[ki])
                    .collect();
                let detected = approx.iter().filter(|&&d| positive(d, delta)).count();
                let fp = p.records.iter().filter(|r| positive(r.control[ki], delta)).count();
                rows.push(ReportRow {
                    program: p.program.clone(),
                    combo: format!("trunc{bits}"),
                    check: kind.to_string(),
                    trials,
                    approximate: approx.len(),
                    detectable: None,
                    detected,
                    raw_rate: rate(detected, approx.len()),
                    per_detectable_rate: None,
                    fp,
                    fn_: approx.len() - detected,
                });
            }
        }
    }
    rows
}

/// Pooled FP/FN counts at one threshold; a pure function of the records.
pub fn rethreshold(programs: &[FbcProgramRecords], delta: f64) -> SweepPoint {
    let (mut fp, mut negatives, mut fn_, mut positives) = (0, 0, 0, 0);
    for p in programs {
        for r in &p.records {
            negatives += r.control.len();
            fp += r.control.iter().filter(|&&d| positive(d, delta)).count();
            for run in r.runs.iter().filter(|run| run.ground_truth == Paradigm::Approximate) {
                positives += run.distances.len();
                fn_ += run.distances.iter().filter(|&&d| !positive(d, delta)).count();
            }
        }
    }
    SweepPoint {
        delta,
        fp,
        negatives,
        fn_,
        positives,
        fp_rate: rate(fp, negatives).unwrap_or(0.0),
        fn_rate: rate(fn_, positives).unwrap_or(0.0),
    }
}

pub(crate) fn fbc_echo(cfg: &ScenarioConfig) -> ConfigEcho {
    let section = cfg.fbc_section().unwrap_or_default();
    let kinds: Vec<String> = section.kinds.iter().map(|k| k.to_string()).collect();
    ConfigEcho {
        seed: cfg.seed,
        trials: cfg.trials,
        strategy: cfg.strategy,
        moduli: None,
        combos: Vec::new(),
        delta: Some(section.delta),
        truncated_bits: section.truncated_bits.clone(),
        notes: vec![
            format!("sentinels {} with n={}, absolute distance", kinds.join(", "), section.n),
            "floating point approximation truncates operand mantissas".into(),
            "fp counts positives on a paired exact run of every job".into(),
        ],
    }
}

/// FBC detection experiment for the config's `[fbc]` section.
pub fn run_fbc_trials(cfg: &ScenarioConfig, jobs: Option<usize>) -> Result<DetectionReport, ScenarioError> {
    let records = run_fbc_records(cfg, jobs)?;
    let delta = cfg.fbc_section().map_or(crate::fbc::DEFAULT_DELTA, |s| s.delta);
    Ok(DetectionReport {
        echo: fbc_echo(cfg),
        rows: fbc_rows(&records, delta),
    })
}

/// FP/FN rates over `deltas` (strictly decreasing), all computed from one
/// set of recorded trials.
pub fn sweep_threshold(cfg: &ScenarioConfig, deltas: &[f64], jobs: Option<usize>) -> Result<SweepCurve, ScenarioError> {
    if deltas.is_empty() {
        return Err(ScenarioError::Config("no thresholds to sweep".into()));
    }
    if deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(ScenarioError::Config("thresholds must be finite and non-negative".into()));
    }
    if deltas.windows(2).any(|w| w[0] <= w[1]) {
        return Err(ScenarioError::Config("thresholds must be sorted in decreasing order".into()));
    }
    if cfg.fbc_section().is_none() {
        return Err(ScenarioError::Config("the sweep needs an [fbc] section".into()));
    }
    let records = run_fbc_records(cfg, jobs)?;
    Ok(SweepCurve {
        points: deltas.iter().map(|&d| rethreshold(&records, d)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ServerStrategy;

    fn small(trials: usize, strategy: ServerStrategy) -> ScenarioConfig {
        ScenarioConfig {
            seed: 5,
            trials,
            strategy,
            rcc: None,
            fbc: Some(FbcSection {
                programs: vec![BuiltinSpec::ConvLayer {
                    channels: 2,
                    kernel: 3,
                    size: 6,
                    out_channels: 1,
                    seed: 0,
                }],
                ..FbcSection::default()
            }),
        }
    }

    #[test]
    fn honest_runs_have_no_positives() {
        let r = run_fbc_trials(&small(100, ServerStrategy::honest()), None).unwrap();
        assert_eq!(r.rows.len(), 6);
        assert!(r.rows.iter().all(|row| row.fp == 0 && row.approximate == 0 && row.raw_rate.is_none()));
    }

    #[test]
    fn truncation_is_detected() {
        let r = run_fbc_trials(&small(100, ServerStrategy::always_dishonest()), None).unwrap();
        let row = r.row("conv_layer", "trunc20", "multiplication").unwrap();
        assert_eq!(row.approximate, 100);
        assert!(row.raw_rate.unwrap() >= 0.95);
    }

    #[test]
    fn sweep_is_a_pure_rethreshold() {
        let cfg = small(60, ServerStrategy::always_dishonest());
        let curve = sweep_threshold(&cfg, &[1e-3, 1e-13, 1e-16], None).unwrap();
        let alone = sweep_threshold(&cfg, &[1e-13], None).unwrap();
        assert_eq!(curve.points[1], alone.points[0]);
        assert!(curve.points[0].fn_ >= curve.points[1].fn_);
        assert!(curve.points[1].fn_ >= curve.points[2].fn_);
    }

    #[test]
    fn sweep_rejects_bad_threshold_lists() {
        let cfg = small(1, ServerStrategy::honest());
        for deltas in [&[][..], &[1e-14, 1e-13][..], &[1e-13, 1e-13][..]] {
            assert!(matches!(sweep_threshold(&cfg, deltas, None), Err(ScenarioError::Config(_))));
        }
    }

    #[test]
    fn fixed_sites_must_be_float() {
        let mut cfg = small(1, ServerStrategy::honest());
        cfg.fbc.as_mut().unwrap().sites = SiteSelection::Nodes(vec![NodeId(999_999)]);
        assert!(run_fbc_records(&cfg, None).is_err());
    }
}

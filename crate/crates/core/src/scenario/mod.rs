//! Simulated strategic server and the detection experiments built on it.

mod config;
mod fbc_trials;
mod rcc_trials;
mod report;
mod strategy;

pub use config::{FbcSection, RccSection, ScenarioConfig, SiteSelection};
pub use fbc_trials::{
    fbc_rows, rethreshold, run_fbc_records, run_fbc_trials, sweep_threshold, FbcProgramRecords, FbcTrialRecord, ServerRun,
};
pub use rcc_trials::{rcc_rows, run_rcc_cell, run_rcc_cells, run_rcc_trials, RccCell, RccTrialRecord, TrialPlan};
pub use report::{ConfigEcho, DetectionReport, ReportRow, SweepCurve, SweepPoint, REPORT_VERSION};
pub use strategy::{ground_truth_oracle, server_execute, Execution, ServerStrategy};

use crate::approx::ApproxError;
use crate::fbc::FbcError;
use crate::ir::IrError;
use crate::rcc::RccError;
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error(transparent)]
    Rcc(#[from] RccError),
    #[error(transparent)]
    Fbc(#[from] FbcError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
}

/// Both experiments of a config, RCC rows first.
pub fn run_bench(cfg: &ScenarioConfig, jobs: Option<usize>) -> Result<DetectionReport, ScenarioError> {
    let mut rows = Vec::new();
    let mut echo = None;
    if cfg.rcc_section().is_some() {
        let r = run_rcc_trials(cfg, jobs)?;
        rows.extend(r.rows);
        echo = Some(r.echo);
    }
    if cfg.fbc_section().is_some() {
        let f = run_fbc_trials(cfg, jobs)?;
        rows.extend(f.rows);
        echo = Some(match echo {
            Some(mut e) => {
                e.delta = f.echo.delta;
                e.truncated_bits = f.echo.truncated_bits;
                for n in f.echo.notes {
                    if !e.notes.contains(&n) {
                        e.notes.push(n);
                    }
                }
                e
            }
            None => f.echo,
        });
    }
    Ok(DetectionReport {
        echo: echo.expect("validated config runs at least one check"),
        rows,
    })
}

/// Runs `f` on a pool of `jobs` threads, or on the global pool.
fn in_pool<T: Send>(
    jobs: Option<usize>,
    f: impl FnOnce() -> Result<T, ScenarioError> + Send,
) -> Result<T, ScenarioError> {
    match jobs {
        None => f(),
        Some(0) => Err(ScenarioError::Config("jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ScenarioError::Config(format!("thread pool: {e}")))?
            .install(f),
    }
}

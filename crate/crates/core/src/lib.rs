//! Golden-model-free detection of dishonest approximate computing.
//!
//! A client offloads a dataflow program to a server that may silently swap
//! exact arithmetic units for approximate ones. Two lightweight checks catch
//! this without recomputing the job:
//!
//! * [`rcc`]: the residual class check re-evaluates integer programs in small
//!   residue rings and compares against the claimed result.
//! * [`fbc`]: the forward-backward check grafts invertible sentinel chains onto
//!   floating-point programs and measures the round-trip error.
//!
//! [`ir`] holds the program representation and interpreter, [`approx`] the
//! arithmetic unit models, and [`scenario`] the trial runner used for the
//! detection-rate and threshold experiments.

use serde::{Deserialize, Serialize};
use std::fmt;

pub mod approx;
pub mod fbc;
pub mod ir;
pub mod rcc;
pub mod rng;
pub mod scenario;

/// Outcome of a check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Judgement {
    /// The claimed result is inconsistent with exact arithmetic.
    Positive,
    /// No inconsistency found.
    Negative,
    /// No round could be evaluated (every modulus hit a non-invertible divisor).
    Inconclusive,
}

impl fmt::Display for Judgement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Judgement::Positive => "POSITIVE",
            Judgement::Negative => "NEGATIVE",
            Judgement::Inconclusive => "INCONCLUSIVE",
        })
    }
}

//! Forward-backward check.
//!
//! A sentinel is a chain of invertible float operations grafted onto a
//! program value: `n` forward steps followed by their inverses. Exact
//! arithmetic returns the value up to rounding; an approximate unit drifts
//! past the threshold.

mod instrument;
mod judge;
mod sentinel;

pub use instrument::{choose_sites, instrument, site_candidates, InstrumentedGraph, SentinelTaps};
pub use judge::{judge, sentinel_roundtrip, FbcVerdict, SentinelRecord};
pub(crate) use sentinel::check_site;
pub use sentinel::{make_sentinel, unit_operand, DistanceMetric, Sentinel, SentinelKind, Step};

use crate::ir::{EvalError, IrError, NodeId};
use thiserror::Error;

/// Default judgment threshold.
pub const DEFAULT_DELTA: f64 = 1e-13;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum FbcError {
    #[error("bad sentinel site {site}: {reason}")]
    Site { site: NodeId, reason: String },
    #[error("trace: {0}")]
    Trace(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ir(#[from] IrError),
}

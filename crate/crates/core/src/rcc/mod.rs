//! Residual class check.
//!
//! An integer program is re-evaluated in the rings Z_m for a few small
//! moduli; the server's claimed outputs must agree with every residue.

mod check;
mod ring;
mod segment;

pub use check::{evaluate_mod, rcc_check, ModuleSet, RccVerdict, RoundOutcome, RoundRecord};
pub use ring::{is_prime, ring_add, ring_div, ring_inv, ring_mul, ring_neg, ring_sub, to_residue, Residue};
pub use segment::{extract_segments, tap_segments, CheckSegment, SegmentTap};

use crate::ir::IrError;
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum RccError {
    #[error("invalid modulus {modulus}: {reason}")]
    Modulus { modulus: u64, reason: String },
    #[error("divisor is in the zero class mod {modulus}")]
    NoInverse { modulus: u64 },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    NotInteger(String),
    #[error(transparent)]
    Ir(#[from] IrError),
}

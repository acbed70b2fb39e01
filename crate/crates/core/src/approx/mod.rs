//! Exact and approximate arithmetic unit models.
//!
//! Integer units are parametric stand-ins for gate-level approximate adders
//! and multipliers; floating point is approximated by truncating operand
//! mantissas.

mod backend;
mod float;
mod int;
mod stats;

pub use backend::{ArithBackend, Paradigm, UnitCombo};
pub use float::{fp_op, trunc_mantissa, FpOp, FpTruncModel};
pub use int::{add16, add_unsigned, div16, mul16, mul_magnitude, sub16, AdderModel, MultiplierModel};
pub use stats::{error_stats, ErrorStats};

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ApproxError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("expected {expected} operand(s), got {got}")]
    Arity { expected: usize, got: usize },
    #[error("div-by-zero")]
    DivByZero,
    #[error("error statistics: {0}")]
    Stats(String),
}

//! Dataflow-graph program representation, serialization and interpreter.

mod builtins;
mod census;
mod eval;
mod format;
mod graph;
mod range;

pub use builtins::{builtin_program, BuiltinSpec, InputDomain};
pub use census::{census, OpCensus};
pub use eval::{evaluate, evaluate_nodes, evaluate_until, Arithmetic, Trace};
pub use format::{parse_inputs, parse_program, GraphDoc, NodeDoc};
pub use graph::{DFGraph, GraphBuilder};
pub use range::{int_ranges, Interval};

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarType {
    Int16,
    Float64,
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalarType::Int16 => "int16",
            ScalarType::Float64 => "float64",
        })
    }
}

/// A runtime value. Integers are 16-bit two's complement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scalar {
    Int(i16),
    Float(f64),
}

impl Scalar {
    pub fn ty(self) -> ScalarType {
        match self {
            Scalar::Int(_) => ScalarType::Int16,
            Scalar::Float(_) => ScalarType::Float64,
        }
    }

    pub fn as_int(self) -> Option<i16> {
        match self {
            Scalar::Int(v) => Some(v),
            Scalar::Float(_) => None,
        }
    }

    pub fn as_float(self) -> Option<f64> {
        match self {
            Scalar::Float(v) => Some(v),
            Scalar::Int(_) => None,
        }
    }

    /// Numeric value widened to f64.
    pub fn to_f64(self) -> f64 {
        match self {
            Scalar::Int(v) => v as f64,
            Scalar::Float(v) => v,
        }
    }

    /// Equality that compares floats by bit pattern.
    pub fn bit_eq(self, other: Scalar) -> bool {
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => a == b,
            (Scalar::Float(a), Scalar::Float(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Float(v) => f.write_str(&format_float(*v)),
        }
    }
}

/// Shortest decimal string that parses back to the same bits.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            Scalar::Int(v) => s.serialize_i64(v as i64),
            Scalar::Float(v) => s.serialize_str(&format_float(v)),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct ScalarVisitor;

        impl Visitor<'_> for ScalarVisitor {
            type Value = Scalar;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an int16 number or a float64 (number or decimal string)")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Scalar, E> {
                i16::try_from(v)
                    .map(Scalar::Int)
                    .map_err(|_| E::custom(format!("{v} is out of int16 range")))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Scalar, E> {
                i16::try_from(v)
                    .map(Scalar::Int)
                    .map_err(|_| E::custom(format!("{v} is out of int16 range")))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Scalar, E> {
                Ok(Scalar::Float(v))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Scalar, E> {
                v.trim()
                    .parse::<f64>()
                    .map(Scalar::Float)
                    .map_err(|_| E::custom(format!("{v:?} is not a float")))
            }
        }

        d.deserialize_any(ScalarVisitor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryFn {
    Tan,
    Arctan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Input,
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Tan,
    Arctan,
    /// Numeric conversion between int16 and float64; the only op whose
    /// operand type may differ from its own.
    Convert,
    Output,
    /// Pass-through tap whose value is recorded in the trace.
    Export,
}

impl Op {
    pub fn arity(self) -> usize {
        match self {
            Op::Input | Op::Const => 0,
            Op::Tan | Op::Arctan | Op::Convert | Op::Output | Op::Export => 1,
            Op::Add | Op::Sub | Op::Mul | Op::Div => 2,
        }
    }

    pub fn binary(self) -> Option<BinaryOp> {
        match self {
            Op::Add => Some(BinaryOp::Add),
            Op::Sub => Some(BinaryOp::Sub),
            Op::Mul => Some(BinaryOp::Mul),
            Op::Div => Some(BinaryOp::Div),
            _ => None,
        }
    }

    pub fn unary(self) -> Option<UnaryFn> {
        match self {
            Op::Tan => Some(UnaryFn::Tan),
            Op::Arctan => Some(UnaryFn::Arctan),
            _ => None,
        }
    }

    /// Add, sub, mul or div.
    pub fn is_arithmetic(self) -> bool {
        self.binary().is_some()
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Op::Input => "input",
            Op::Const => "const",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Tan => "tan",
            Op::Arctan => "arctan",
            Op::Convert => "convert",
            Op::Output => "output",
            Op::Export => "export",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DFNode {
    pub id: NodeId,
    pub op: Op,
    pub operands: Vec<NodeId>,
    /// Literal for `Const` nodes.
    pub value: Option<Scalar>,
    pub ty: ScalarType,
}

impl DFNode {
    pub fn new(id: u32, op: Op, operands: &[u32], ty: ScalarType) -> Self {
        DFNode {
            id: NodeId(id),
            op,
            operands: operands.iter().map(|&o| NodeId(o)).collect(),
            value: None,
            ty,
        }
    }

    pub fn constant(id: u32, value: Scalar) -> Self {
        DFNode {
            id: NodeId(id),
            op: Op::Const,
            operands: Vec::new(),
            value: Some(value),
            ty: value.ty(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValidationRule {
    Empty,
    DuplicateId,
    Dangling,
    Arity,
    Value,
    Type,
    InputOutput,
    Cycle,
}

impl fmt::Display for ValidationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValidationRule::Empty => "empty",
            ValidationRule::DuplicateId => "duplicate-id",
            ValidationRule::Dangling => "dangling",
            ValidationRule::Arity => "arity",
            ValidationRule::Value => "value",
            ValidationRule::Type => "type-mix",
            ValidationRule::InputOutput => "io",
            ValidationRule::Cycle => "cycle",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalErrorKind {
    DivByZero,
    NonFinite,
}

impl fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalErrorKind::DivByZero => "div-by-zero",
            EvalErrorKind::NonFinite => "non-finite",
        })
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("{kind} at node {node}")]
pub struct EvalError {
    pub node: NodeId,
    pub kind: EvalErrorKind,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum IrError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid graph ({rule}){}: {detail}", .node.map(|n| format!(" at node {n}")).unwrap_or_default())]
    Validation {
        node: Option<NodeId>,
        rule: ValidationRule,
        detail: String,
    },
    #[error("bad inputs: {0}")]
    Input(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("builtin: {0}")]
    Builtin(String),
}

impl IrError {
    pub(crate) fn invalid(node: Option<NodeId>, rule: ValidationRule, detail: impl Into<String>) -> Self {
        IrError::Validation {
            node,
            rule,
            detail: detail.into(),
        }
    }

    pub fn rule(&self) -> Option<ValidationRule> {
        match self {
            IrError::Validation { rule, .. } => Some(*rule),
            _ => None,
        }
    }
}

use super::{FbcError, InstrumentedGraph, Sentinel, SentinelKind, Step};
use crate::ir::{Arithmetic, BinaryOp, EvalError, EvalErrorKind, NodeId, Scalar, Trace, UnaryFn};
use crate::Judgement;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentinelRecord {
    pub site: NodeId,
    pub kind: SentinelKind,
    /// Value at the data entrance.
    pub input: f64,
    /// Value after the forward and backward chains.
    pub returned: f64,
    pub distance: f64,
    pub delta: f64,
    pub positive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FbcVerdict {
    pub judgement: Judgement,
    pub sentinels: Vec<SentinelRecord>,
}

impl FbcVerdict {
    pub fn positives(&self) -> usize {
        self.sentinels.iter().filter(|s| s.positive).count()
    }
}

fn export_float(trace: &Trace, id: NodeId) -> Result<f64, FbcError> {
    match trace.export(id) {
        Some(Scalar::Float(x)) => Ok(x),
        Some(Scalar::Int(_)) => Err(FbcError::Trace(format!("export {id} is not a float"))),
        None => Err(FbcError::Trace(format!("trace has no export {id}"))),
    }
}

fn record(s: &Sentinel, input: f64, returned: f64) -> SentinelRecord {
    let distance = s.metric.distance(input, returned);
    SentinelRecord {
        site: s.site,
        kind: s.kind,
        input,
        returned,
        distance,
        delta: s.delta,
        positive: s.is_positive(distance),
    }
}

/// Compares each sentinel's entrance and exit values; any failing sentinel
/// makes the whole run positive.
pub fn judge(trace: &Trace, instrumented: &InstrumentedGraph) -> Result<FbcVerdict, FbcError> {
    if instrumented.taps.len() != instrumented.sentinels.len() {
        return Err(FbcError::Trace("instrumented graph has mismatched sentinel taps".into()));
    }
    let sentinels = instrumented
        .sentinels
        .iter()
        .zip(&instrumented.taps)
        .map(|(s, t)| Ok(record(s, export_float(trace, t.entrance)?, export_float(trace, t.exit)?)))
        .collect::<Result<Vec<_>, FbcError>>()?;
    let judgement = if sentinels.iter().any(|r| r.positive) {
        Judgement::Positive
    } else {
        Judgement::Negative
    };
    Ok(FbcVerdict { judgement, sentinels })
}

/// Runs the sentinel chain on `x` directly through `arith`, without building
/// a graph. Gives the same result as instrumenting, evaluating and judging.
pub fn sentinel_roundtrip<A: Arithmetic + ?Sized>(
    sentinel: &Sentinel,
    x: f64,
    arith: &A,
) -> Result<SentinelRecord, FbcError> {
    let fail = |kind| FbcError::Eval(EvalError {
        node: sentinel.site,
        kind,
    });
    if !x.is_finite() {
        return Err(fail(EvalErrorKind::NonFinite));
    }
    let node = sentinel.site;
    let mut cur = x;
    for step in sentinel.steps() {
        let r = match step {
            Step::Add(r) => arith.float_binary(node, BinaryOp::Add, cur, r),
            Step::Sub(r) => arith.float_binary(node, BinaryOp::Sub, cur, r),
            Step::Mul(r) => arith.float_binary(node, BinaryOp::Mul, cur, r),
            Step::Div(r) => arith.float_binary(node, BinaryOp::Div, cur, r),
            Step::Arctan => arith.float_unary(node, UnaryFn::Arctan, cur),
            Step::Tan => arith.float_unary(node, UnaryFn::Tan, cur),
        };
        cur = r.map_err(fail)?;
        if !cur.is_finite() {
            return Err(fail(EvalErrorKind::NonFinite));
        }
    }
    Ok(record(sentinel, x, cur))
}

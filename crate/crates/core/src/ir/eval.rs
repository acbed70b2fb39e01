use super::{BinaryOp, DFGraph, EvalError, EvalErrorKind, IrError, NodeId, Op, Scalar, ScalarType, UnaryFn};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Arithmetic semantics plugged into the interpreter.
///
/// The node id lets an implementation treat individual sites differently,
/// which is how fault-injection fixtures are built.
pub trait Arithmetic {
    fn int_binary(&self, node: NodeId, op: BinaryOp, a: i16, b: i16) -> Result<i16, EvalErrorKind>;
    fn float_binary(&self, node: NodeId, op: BinaryOp, a: f64, b: f64) -> Result<f64, EvalErrorKind>;
    fn float_unary(&self, node: NodeId, f: UnaryFn, x: f64) -> Result<f64, EvalErrorKind>;
}

impl<A: Arithmetic + ?Sized> Arithmetic for &A {
    fn int_binary(&self, node: NodeId, op: BinaryOp, a: i16, b: i16) -> Result<i16, EvalErrorKind> {
        (**self).int_binary(node, op, a, b)
    }

    fn float_binary(&self, node: NodeId, op: BinaryOp, a: f64, b: f64) -> Result<f64, EvalErrorKind> {
        (**self).float_binary(node, op, a, b)
    }

    fn float_unary(&self, node: NodeId, f: UnaryFn, x: f64) -> Result<f64, EvalErrorKind> {
        (**self).float_unary(node, f, x)
    }
}

/// Output values plus every exported intermediate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub outputs: Vec<Scalar>,
    pub exports: BTreeMap<NodeId, Scalar>,
}

impl Trace {
    pub fn export(&self, id: NodeId) -> Option<Scalar> {
        self.exports.get(&id).copied()
    }

    /// Bitwise equality of outputs and exports.
    pub fn bit_eq(&self, other: &Trace) -> bool {
        self.outputs.len() == other.outputs.len()
            && self.outputs.iter().zip(&other.outputs).all(|(a, b)| a.bit_eq(*b))
            && self.exports.len() == other.exports.len()
            && self
                .exports
                .iter()
                .zip(&other.exports)
                .all(|((ka, a), (kb, b))| ka == kb && a.bit_eq(*b))
    }
}

pub fn evaluate<A: Arithmetic + ?Sized>(graph: &DFGraph, inputs: &[Scalar], arith: &A) -> Result<Trace, IrError> {
    let values = evaluate_nodes(graph, inputs, arith)?;
    let mut outputs = Vec::with_capacity(graph.outputs().len());
    for id in graph.outputs() {
        outputs.push(values[graph.slot(*id).expect("validated")]);
    }
    let exports = graph
        .nodes()
        .iter()
        .zip(&values)
        .filter(|(n, _)| n.op == Op::Export)
        .map(|(n, v)| (n.id, *v))
        .collect();
    Ok(Trace { outputs, exports })
}

/// Value of every node, indexed by topological slot.
pub fn evaluate_nodes<A: Arithmetic + ?Sized>(
    graph: &DFGraph,
    inputs: &[Scalar],
    arith: &A,
) -> Result<Vec<Scalar>, IrError> {
    run(graph, inputs, arith, graph.len())
}

/// Value of one node, evaluating only the topological prefix up to it.
pub fn evaluate_until<A: Arithmetic + ?Sized>(
    graph: &DFGraph,
    inputs: &[Scalar],
    arith: &A,
    target: NodeId,
) -> Result<Scalar, IrError> {
    let slot = graph
        .slot(target)
        .ok_or_else(|| IrError::Input(format!("no node {target} in {}", graph.name())))?;
    Ok(run(graph, inputs, arith, slot + 1)?[slot])
}

fn run<A: Arithmetic + ?Sized>(graph: &DFGraph, inputs: &[Scalar], arith: &A, end: usize) -> Result<Vec<Scalar>, IrError> {
    check_inputs(graph, inputs)?;
    let mut values = vec![Scalar::Int(0); graph.len()];
    for (id, v) in graph.inputs().iter().zip(inputs) {
        values[graph.slot(*id).expect("validated")] = *v;
    }
    for (i, node) in graph.nodes().iter().enumerate().take(end) {
        let ops = graph.operand_slots(i);
        let fail = |kind| IrError::Eval(EvalError { node: node.id, kind });
        let v = match node.op {
            Op::Input => continue,
            Op::Const => node.value.expect("validated const"),
            Op::Output | Op::Export => values[ops[0]],
            Op::Convert => convert(values[ops[0]], node.ty).map_err(fail)?,
            Op::Tan | Op::Arctan => {
                let f = node.op.unary().expect("unary op");
                let x = values[ops[0]].as_float().expect("validated float operand");
                Scalar::Float(finite(arith.float_unary(node.id, f, x)).map_err(fail)?)
            }
            Op::Add | Op::Sub | Op::Mul | Op::Div => {
                let op = node.op.binary().expect("binary op");
                match (values[ops[0]], values[ops[1]]) {
                    (Scalar::Int(a), Scalar::Int(b)) => Scalar::Int(arith.int_binary(node.id, op, a, b).map_err(fail)?),
                    (Scalar::Float(a), Scalar::Float(b)) => {
                        Scalar::Float(finite(arith.float_binary(node.id, op, a, b)).map_err(fail)?)
                    }
                    _ => unreachable!("operand types are validated"),
                }
            }
        };
        values[i] = v;
    }
    Ok(values)
}

fn finite(r: Result<f64, EvalErrorKind>) -> Result<f64, EvalErrorKind> {
    match r {
        Ok(x) if !x.is_finite() => Err(EvalErrorKind::NonFinite),
        other => other,
    }
}

fn convert(v: Scalar, to: ScalarType) -> Result<Scalar, EvalErrorKind> {
    match (v, to) {
        (Scalar::Int(a), ScalarType::Float64) => Ok(Scalar::Float(a as f64)),
        (Scalar::Float(x), ScalarType::Int16) if !x.is_finite() => Err(EvalErrorKind::NonFinite),
        // Truncate toward zero, then wrap into 16 bits like a register move.
        (Scalar::Float(x), ScalarType::Int16) => Ok(Scalar::Int(x.trunc() as i64 as i16)),
        (same, _) => Ok(same),
    }
}

fn check_inputs(graph: &DFGraph, inputs: &[Scalar]) -> Result<(), IrError> {
    let types = graph.input_types();
    if types.len() != inputs.len() {
        return Err(IrError::Input(format!("expected {} inputs, got {}", types.len(), inputs.len())));
    }
    for (i, (ty, v)) in types.iter().zip(inputs).enumerate() {
        if v.ty() != *ty {
            return Err(IrError::Input(format!("input {i} must be {ty}, got {}", v.ty())));
        }
        if let Scalar::Float(x) = v {
            if !x.is_finite() {
                return Err(IrError::Input(format!("input {i} is not finite")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::ArithBackend;
    use crate::ir::GraphBuilder;

    fn fixture() -> DFGraph {
        let mut b = GraphBuilder::new("fixture", ScalarType::Int16);
        let x = b.input(ScalarType::Int16);
        let y = b.input(ScalarType::Int16);
        let s = b.add(x, y);
        let t = b.export(s);
        let p = b.mul(t, y);
        let q = b.div(p, x);
        b.output(q);
        b.build().unwrap()
    }

    #[test]
    fn evaluates_with_exports() {
        let g = fixture();
        let tr = evaluate(&g, &[Scalar::Int(3), Scalar::Int(4)], &ArithBackend::exact()).unwrap();
        assert_eq!(tr.outputs, vec![Scalar::Int(9)]);
        assert_eq!(tr.exports.values().copied().collect::<Vec<_>>(), vec![Scalar::Int(7)]);
    }

    #[test]
    fn div_by_zero_names_the_node() {
        let g = fixture();
        let err = evaluate(&g, &[Scalar::Int(0), Scalar::Int(4)], &ArithBackend::exact()).unwrap_err();
        assert_eq!(
            err,
            IrError::Eval(EvalError {
                node: NodeId(5),
                kind: EvalErrorKind::DivByZero
            })
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = fixture();
        let exact = ArithBackend::exact();
        assert!(matches!(evaluate(&g, &[Scalar::Int(1)], &exact), Err(IrError::Input(_))));
        assert!(matches!(
            evaluate(&g, &[Scalar::Int(1), Scalar::Float(1.0)], &exact),
            Err(IrError::Input(_))
        ));
    }

    #[test]
    fn non_finite_results_are_errors() {
        let mut b = GraphBuilder::new("overflow", ScalarType::Float64);
        let x = b.input(ScalarType::Float64);
        let y = b.mul(x, x);
        b.output(y);
        let g = b.build().unwrap();
        let err = evaluate(&g, &[Scalar::Float(1e300)], &ArithBackend::exact()).unwrap_err();
        assert!(matches!(err, IrError::Eval(EvalError { kind: EvalErrorKind::NonFinite, .. })));
    }

    #[test]
    fn convert_truncates_and_wraps() {
        assert_eq!(convert(Scalar::Float(-2.9), ScalarType::Int16), Ok(Scalar::Int(-2)));
        assert_eq!(convert(Scalar::Float(40000.0), ScalarType::Int16), Ok(Scalar::Int(-25536)));
        assert_eq!(convert(Scalar::Int(-3), ScalarType::Float64), Ok(Scalar::Float(-3.0)));
    }

    #[test]
    fn prefix_matches_full_run() {
        let g = fixture();
        let x = [Scalar::Int(3), Scalar::Int(4)];
        let exact = ArithBackend::exact();
        let all = evaluate_nodes(&g, &x, &exact).unwrap();
        for n in g.nodes() {
            let v = evaluate_until(&g, &x, &exact, n.id).unwrap();
            assert!(v.bit_eq(all[g.slot(n.id).unwrap()]));
        }
        assert!(matches!(evaluate_until(&g, &x, &exact, NodeId(99)), Err(IrError::Input(_))));
    }
}

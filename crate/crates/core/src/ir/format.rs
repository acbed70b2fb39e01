use super::{DFGraph, DFNode, IrError, NodeId, Op, Scalar, ScalarType, ValidationRule};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// On-disk program form.
///
/// A node's `type` defaults to the program type; a float node may give its
/// constant as a plain number or as a decimal string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    #[serde(default)]
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ScalarType,
    pub nodes: Vec<NodeDoc>,
    #[serde(default)]
    pub inputs: Vec<NodeId>,
    pub outputs: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: NodeId,
    pub op: Op,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub operands: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Scalar>,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub ty: Option<ScalarType>,
}

impl TryFrom<GraphDoc> for DFGraph {
    type Error = IrError;

    fn try_from(doc: GraphDoc) -> Result<Self, IrError> {
        let nodes = doc
            .nodes
            .into_iter()
            .map(|n| {
                let ty = n.ty.unwrap_or(doc.ty);
                let value = match (n.value, ty) {
                    (Some(Scalar::Int(v)), ScalarType::Float64) => Some(Scalar::Float(v as f64)),
                    (Some(Scalar::Float(_)), ScalarType::Int16) => {
                        return Err(IrError::invalid(Some(n.id), ValidationRule::Value, "int16 const needs an integer"))
                    }
                    (v, _) => v,
                };
                Ok(DFNode {
                    id: n.id,
                    op: n.op,
                    operands: n.operands,
                    value,
                    ty,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        DFGraph::new(doc.name, doc.ty, nodes, doc.inputs, doc.outputs)
    }
}

impl From<DFGraph> for GraphDoc {
    fn from(g: DFGraph) -> Self {
        GraphDoc::from(&g)
    }
}

impl From<&DFGraph> for GraphDoc {
    fn from(g: &DFGraph) -> Self {
        let ty = g.scalar_type();
        GraphDoc {
            name: g.name().to_string(),
            ty,
            nodes: g
                .nodes()
                .iter()
                .map(|n| NodeDoc {
                    id: n.id,
                    op: n.op,
                    operands: n.operands.clone(),
                    value: n.value,
                    ty: (n.ty != ty).then_some(n.ty),
                })
                .collect(),
            inputs: g.inputs().to_vec(),
            outputs: g.outputs().to_vec(),
        }
    }
}

impl Serialize for DFGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GraphDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DFGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = GraphDoc::deserialize(d)?;
        DFGraph::try_from(doc).map_err(serde::de::Error::custom)
    }
}

fn parse_error(e: serde_json::Error) -> IrError {
    IrError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parse and validate a JSON program.
pub fn parse_program(text: &str) -> Result<DFGraph, IrError> {
    let doc: GraphDoc = serde_json::from_str(text).map_err(parse_error)?;
    DFGraph::try_from(doc)
}

/// Parse a JSON array of input values, coercing each to the program's input type.
pub fn parse_inputs(text: &str, graph: &DFGraph) -> Result<Vec<Scalar>, IrError> {
    let raw: Vec<Value> = serde_json::from_str(text).map_err(parse_error)?;
    let types = graph.input_types();
    if raw.len() != types.len() {
        return Err(IrError::Input(format!("expected {} inputs, got {}", types.len(), raw.len())));
    }
    raw.iter()
        .zip(types)
        .enumerate()
        .map(|(i, (v, ty))| coerce(v, ty).ok_or_else(|| IrError::Input(format!("input {i} is not a valid {ty}: {v}"))))
        .collect()
}

fn coerce(v: &Value, ty: ScalarType) -> Option<Scalar> {
    match ty {
        ScalarType::Int16 => v.as_i64().and_then(|x| i16::try_from(x).ok()).map(Scalar::Int),
        ScalarType::Float64 => match v {
            Value::Number(n) => n.as_f64().map(Scalar::Float),
            Value::String(s) => s.trim().parse().ok().map(Scalar::Float),
            _ => None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ADDER: &str = r#"{
        "name": "adder", "type": "int16",
        "nodes": [
            {"id": 0, "op": "input"},
            {"id": 1, "op": "const", "value": 5},
            {"id": 2, "op": "add", "operands": [0, 1]},
            {"id": 3, "op": "output", "operands": [2]}
        ],
        "inputs": [0], "outputs": [3]
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let g = parse_program(ADDER).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        let back = parse_program(&text).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_program("{\n  \"name\": oops }").unwrap_err();
        match err {
            IrError::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn float_consts_accept_numbers_and_strings() {
        let text = r#"{"type": "float64",
            "nodes": [{"id": 0, "op": "input"}, {"id": 1, "op": "const", "value": 2},
                      {"id": 2, "op": "const", "value": "0.1"},
                      {"id": 3, "op": "mul", "operands": [0, 1]}, {"id": 4, "op": "add", "operands": [3, 2]},
                      {"id": 5, "op": "output", "operands": [4]}],
            "inputs": [0], "outputs": [5]}"#;
        let g = parse_program(text).unwrap();
        assert_eq!(g.node(NodeId(1)).unwrap().value, Some(Scalar::Float(2.0)));
        let json = serde_json::to_string(&g).unwrap();
        assert!(json.contains("\"0.1\""));
    }

    #[test]
    fn inputs_are_coerced_by_type() {
        let g = parse_program(ADDER).unwrap();
        assert_eq!(parse_inputs("[7]", &g).unwrap(), vec![Scalar::Int(7)]);
        assert!(parse_inputs("[70000]", &g).is_err());
        assert!(parse_inputs("[1.5]", &g).is_err());
        assert!(parse_inputs("[1, 2]", &g).is_err());
    }
}

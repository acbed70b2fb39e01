use super::{DFNode, IrError, NodeId, Op, Scalar, ScalarType, ValidationRule};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

/// A validated, acyclic dataflow graph.
///
/// Nodes are stored in a deterministic topological order (ties broken by the
/// order in which they were supplied), with operand positions resolved up
/// front so evaluation is a single linear pass.
#[derive(Clone, Debug)]
pub struct DFGraph {
    name: String,
    ty: ScalarType,
    nodes: Vec<DFNode>,
    slots: HashMap<NodeId, usize>,
    operand_slots: Vec<Vec<usize>>,
    inputs: Vec<NodeId>,
    outputs: Vec<NodeId>,
}

impl PartialEq for DFGraph {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.ty == other.ty
            && self.nodes == other.nodes
            && self.inputs == other.inputs
            && self.outputs == other.outputs
    }
}

impl DFGraph {
    pub fn new(
        name: impl Into<String>,
        ty: ScalarType,
        nodes: Vec<DFNode>,
        inputs: Vec<NodeId>,
        outputs: Vec<NodeId>,
    ) -> Result<Self, IrError> {
        use ValidationRule as R;
        if nodes.is_empty() {
            return Err(IrError::invalid(None, R::Empty, "graph has no nodes"));
        }

        let mut pos = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if pos.insert(node.id, i).is_some() {
                return Err(IrError::invalid(Some(node.id), R::DuplicateId, "id used twice"));
            }
        }

        for node in &nodes {
            if node.operands.len() != node.op.arity() {
                return Err(IrError::invalid(
                    Some(node.id),
                    R::Arity,
                    format!("{} takes {} operand(s), got {}", node.op, node.op.arity(), node.operands.len()),
                ));
            }
            if let Some(o) = node.operands.iter().find(|o| !pos.contains_key(o)) {
                return Err(IrError::invalid(Some(node.id), R::Dangling, format!("operand {o} does not exist")));
            }
            check_value(node)?;
        }

        for node in &nodes {
            check_types(node, ty, |o| nodes[pos[&o]].ty)?;
        }

        check_io(&nodes, &pos, &inputs, Op::Input, "inputs")?;
        check_io(&nodes, &pos, &outputs, Op::Output, "outputs")?;
        if outputs.is_empty() {
            return Err(IrError::invalid(None, R::InputOutput, "graph has no outputs"));
        }

        let order = topo_order(&nodes, &pos)?;
        let mut nodes_by_pos: Vec<Option<DFNode>> = nodes.into_iter().map(Some).collect();
        let nodes: Vec<DFNode> = order.iter().map(|&i| nodes_by_pos[i].take().expect("each node once")).collect();
        let slots: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let operand_slots = nodes
            .iter()
            .map(|n| n.operands.iter().map(|o| slots[o]).collect())
            .collect();

        Ok(DFGraph {
            name: name.into(),
            ty,
            nodes,
            slots,
            operand_slots,
            inputs,
            outputs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scalar_type(&self) -> ScalarType {
        self.ty
    }

    /// Nodes in topological order.
    pub fn nodes(&self) -> &[DFNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&DFNode> {
        self.slots.get(&id).map(|&i| &self.nodes[i])
    }

    /// Topological position of a node.
    pub fn slot(&self, id: NodeId) -> Option<usize> {
        self.slots.get(&id).copied()
    }

    pub(crate) fn operand_slots(&self, slot: usize) -> &[usize] {
        &self.operand_slots[slot]
    }

    pub fn inputs(&self) -> &[NodeId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn input_types(&self) -> Vec<ScalarType> {
        self.inputs.iter().map(|&i| self.nodes[self.slots[&i]].ty).collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn max_id(&self) -> NodeId {
        self.nodes.iter().map(|n| n.id).max().expect("graphs are never empty")
    }

    /// Consumer slots of every node, indexed by slot.
    pub fn consumers(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (i, ops) in self.operand_slots.iter().enumerate() {
            for &o in ops {
                if !out[o].contains(&i) {
                    out[o].push(i);
                }
            }
        }
        out
    }

    /// A new graph with `extra` nodes appended and the output list replaced.
    pub fn extended(&self, extra: Vec<DFNode>, outputs: Vec<NodeId>) -> Result<DFGraph, IrError> {
        let mut nodes = self.nodes.clone();
        nodes.extend(extra);
        DFGraph::new(self.name.clone(), self.ty, nodes, self.inputs.clone(), outputs)
    }
}

fn check_value(node: &DFNode) -> Result<(), IrError> {
    let bad = |detail: &str| Err(IrError::invalid(Some(node.id), ValidationRule::Value, detail));
    match (node.op, node.value) {
        (Op::Const, None) => bad("const node needs a value"),
        (Op::Const, Some(v)) if v.ty() != node.ty => bad("const value does not match node type"),
        (Op::Const, Some(Scalar::Float(x))) if !x.is_finite() => bad("const value must be finite"),
        (Op::Const, Some(_)) => Ok(()),
        (_, Some(_)) => bad("only const nodes carry a value"),
        (_, None) => Ok(()),
    }
}

fn check_types(node: &DFNode, graph_ty: ScalarType, ty_of: impl Fn(NodeId) -> ScalarType) -> Result<(), IrError> {
    let mix = |detail: String| Err(IrError::invalid(Some(node.id), ValidationRule::Type, detail));
    if graph_ty == ScalarType::Int16 && node.ty != ScalarType::Int16 {
        return mix(format!("{} node in an int16 program", node.ty));
    }
    match node.op {
        Op::Tan | Op::Arctan if node.ty != ScalarType::Float64 => mix(format!("{} is only defined for float64", node.op)),
        Op::Convert => Ok(()),
        _ => match node.operands.iter().find(|&&o| ty_of(o) != node.ty) {
            Some(o) => mix(format!("operand {o} is {} but node is {}", ty_of(*o), node.ty)),
            None => Ok(()),
        },
    }
}

fn check_io(
    nodes: &[DFNode],
    pos: &HashMap<NodeId, usize>,
    list: &[NodeId],
    op: Op,
    what: &str,
) -> Result<(), IrError> {
    let bad = |node: Option<NodeId>, detail: String| Err(IrError::invalid(node, ValidationRule::InputOutput, detail));
    let mut seen = HashSet::new();
    for &id in list {
        match pos.get(&id) {
            None => return bad(Some(id), format!("{what} lists a missing node")),
            Some(&i) if nodes[i].op != op => return bad(Some(id), format!("{what} lists a {} node", nodes[i].op)),
            _ => {}
        }
        if !seen.insert(id) {
            return bad(Some(id), format!("{what} lists the node twice"));
        }
    }
    if let Some(n) = nodes.iter().find(|n| n.op == op && !seen.contains(&n.id)) {
        return bad(Some(n.id), format!("{} node missing from {what}", n.op));
    }
    Ok(())
}

/// Kahn's algorithm; ready nodes leave in supplied order.
fn topo_order(nodes: &[DFNode], pos: &HashMap<NodeId, usize>) -> Result<Vec<usize>, IrError> {
    let mut indegree: Vec<usize> = nodes.iter().map(|n| n.operands.len()).collect();
    let mut consumers = vec![Vec::new(); nodes.len()];
    for (i, n) in nodes.iter().enumerate() {
        for o in &n.operands {
            consumers[pos[o]].push(i);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..nodes.len()).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &c in &consumers[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() < nodes.len() {
        let stuck = (0..nodes.len())
            .filter(|&i| indegree[i] > 0)
            .map(|i| nodes[i].id)
            .min()
            .expect("some node is stuck");
        return Err(IrError::invalid(Some(stuck), ValidationRule::Cycle, "graph contains a cycle"));
    }
    Ok(order)
}

/// Incremental construction with sequential ids and inferred types.
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    name: String,
    ty: ScalarType,
    nodes: Vec<DFNode>,
    inputs: Vec<NodeId>,
    outputs: Vec<NodeId>,
}

impl GraphBuilder {
    pub fn new(name: impl Into<String>, ty: ScalarType) -> Self {
        GraphBuilder {
            name: name.into(),
            ty,
            nodes: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    fn push(&mut self, op: Op, operands: &[NodeId], value: Option<Scalar>, ty: ScalarType) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(DFNode {
            id,
            op,
            operands: operands.to_vec(),
            value,
            ty,
        });
        id
    }

    fn ty_of(&self, id: NodeId) -> ScalarType {
        self.nodes[id.0 as usize].ty
    }

    pub fn input(&mut self, ty: ScalarType) -> NodeId {
        let id = self.push(Op::Input, &[], None, ty);
        self.inputs.push(id);
        id
    }

    pub fn constant(&mut self, value: Scalar) -> NodeId {
        self.push(Op::Const, &[], Some(value), value.ty())
    }

    pub fn binary(&mut self, op: Op, a: NodeId, b: NodeId) -> NodeId {
        let ty = self.ty_of(a);
        self.push(op, &[a, b], None, ty)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Add, a, b)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Sub, a, b)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Mul, a, b)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Div, a, b)
    }

    pub fn tan(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Tan, &[x], None, ScalarType::Float64)
    }

    pub fn arctan(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Arctan, &[x], None, ScalarType::Float64)
    }

    pub fn convert(&mut self, x: NodeId, to: ScalarType) -> NodeId {
        self.push(Op::Convert, &[x], None, to)
    }

    pub fn export(&mut self, x: NodeId) -> NodeId {
        let ty = self.ty_of(x);
        self.push(Op::Export, &[x], None, ty)
    }

    pub fn output(&mut self, x: NodeId) -> NodeId {
        let ty = self.ty_of(x);
        let id = self.push(Op::Output, &[x], None, ty);
        self.outputs.push(id);
        id
    }

    pub fn build(self) -> Result<DFGraph, IrError> {
        DFGraph::new(self.name, self.ty, self.nodes, self.inputs, self.outputs)
    }
}

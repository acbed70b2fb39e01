use super::{rcc_check, ModuleSet, RccError, RccVerdict};
use crate::ir::{DFGraph, DFNode, NodeId, Op, Scalar, ScalarType, Trace};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};

/// An export tap: node `export` records the value of `tapped`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentTap {
    pub export: NodeId,
    pub tapped: NodeId,
}

/// A connected integer region of a larger program, checkable on its own.
///
/// The subgraph reuses the original ids for its arithmetic nodes and for its
/// inputs (which stand for the external values feeding the region). Its
/// output ids equal the ids of the matching exit taps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSegment {
    pub subgraph: DFGraph,
    /// Arithmetic nodes of the original program covered by this segment.
    pub nodes: Vec<NodeId>,
    /// One tap per subgraph input, in input order.
    pub entry_exports: Vec<SegmentTap>,
    /// One tap per subgraph output, in output order.
    pub exit_exports: Vec<SegmentTap>,
    /// Number of breadth-first levels, counting the seed as level 1.
    pub depth: usize,
}

impl CheckSegment {
    fn tapped_values(taps: &[SegmentTap], trace: &Trace) -> Result<Vec<i64>, RccError> {
        taps.iter()
            .map(|t| match trace.export(t.export) {
                Some(Scalar::Int(v)) => Ok(v as i64),
                Some(Scalar::Float(_)) => Err(RccError::Config(format!("export {} holds a float", t.export))),
                None => Err(RccError::Config(format!("trace has no export {}", t.export))),
            })
            .collect()
    }

    pub fn entry_values(&self, trace: &Trace) -> Result<Vec<i64>, RccError> {
        Self::tapped_values(&self.entry_exports, trace)
    }

    pub fn exit_values(&self, trace: &Trace) -> Result<Vec<i64>, RccError> {
        Self::tapped_values(&self.exit_exports, trace)
    }

    /// Residue check of this segment against the values a tapped run reported.
    pub fn check(&self, trace: &Trace, modules: &ModuleSet) -> Result<RccVerdict, RccError> {
        rcc_check(&self.subgraph, &self.entry_values(trace)?, &self.exit_values(trace)?, modules)
    }
}

/// Breadth-first segmentation of the integer arithmetic in `graph`.
///
/// Seeds are taken in topological order; each search expands through
/// operands and consumers that are uncovered integer add/sub/mul/div nodes,
/// up to `max_depth` levels (`None` for unbounded). Because searches never
/// enter covered nodes, segments are disjoint.
pub fn extract_segments(graph: &DFGraph, max_depth: Option<usize>) -> Result<Vec<CheckSegment>, RccError> {
    let max_depth = max_depth.unwrap_or(usize::MAX);
    if max_depth == 0 {
        return Err(RccError::Config("max_depth must be at least 1".into()));
    }
    let nodes = graph.nodes();
    let is_int_arith = |s: usize| nodes[s].op.is_arithmetic() && nodes[s].ty == ScalarType::Int16;
    let consumers = graph.consumers();
    let mut covered = vec![false; nodes.len()];
    let mut next_id = graph.max_id().0 + 1;
    let mut segments = Vec::new();

    for seed in 0..nodes.len() {
        if !is_int_arith(seed) || covered[seed] {
            continue;
        }
        covered[seed] = true;
        let mut members = BTreeSet::from([seed]);
        let mut depth = 1;
        let mut queue = VecDeque::from([(seed, 1usize)]);
        while let Some((s, d)) = queue.pop_front() {
            if d >= max_depth {
                continue;
            }
            for &nb in graph.operand_slots(s).iter().chain(&consumers[s]) {
                if is_int_arith(nb) && !covered[nb] {
                    covered[nb] = true;
                    members.insert(nb);
                    depth = depth.max(d + 1);
                    queue.push_back((nb, d + 1));
                }
            }
        }
        let index = segments.len();
        segments.push(build_segment(graph, &members, &consumers, depth, index, &mut next_id)?);
    }
    Ok(segments)
}

fn build_segment(
    graph: &DFGraph,
    members: &BTreeSet<usize>,
    consumers: &[Vec<usize>],
    depth: usize,
    index: usize,
    next_id: &mut u32,
) -> Result<CheckSegment, RccError> {
    let nodes = graph.nodes();
    let mut fresh = || {
        let id = NodeId(*next_id);
        *next_id += 1;
        id
    };
    let externals: BTreeSet<usize> = members
        .iter()
        .flat_map(|&s| graph.operand_slots(s).iter().copied())
        .filter(|s| !members.contains(s))
        .collect();

    let mut sub_nodes = Vec::new();
    let mut inputs = Vec::new();
    let mut entry_exports = Vec::new();
    for &e in &externals {
        let n = &nodes[e];
        if n.op == Op::Const {
            sub_nodes.push(n.clone());
        } else {
            sub_nodes.push(DFNode {
                id: n.id,
                op: Op::Input,
                operands: Vec::new(),
                value: None,
                ty: ScalarType::Int16,
            });
            inputs.push(n.id);
            entry_exports.push(SegmentTap {
                export: fresh(),
                tapped: n.id,
            });
        }
    }
    sub_nodes.extend(members.iter().map(|&s| nodes[s].clone()));

    let mut outputs = Vec::new();
    let mut exit_exports = Vec::new();
    for &s in members {
        let leaves = consumers[s].is_empty() || consumers[s].iter().any(|c| !members.contains(c));
        if leaves {
            let tap = SegmentTap {
                export: fresh(),
                tapped: nodes[s].id,
            };
            sub_nodes.push(DFNode {
                id: tap.export,
                op: Op::Output,
                operands: vec![nodes[s].id],
                value: None,
                ty: ScalarType::Int16,
            });
            outputs.push(tap.export);
            exit_exports.push(tap);
        }
    }

    let subgraph = DFGraph::new(
        format!("{}#seg{index}", graph.name()),
        ScalarType::Int16,
        sub_nodes,
        inputs,
        outputs,
    )?;
    Ok(CheckSegment {
        subgraph,
        nodes: members.iter().map(|&s| nodes[s].id).collect(),
        entry_exports,
        exit_exports,
        depth,
    })
}

/// The original program with every segment's entry and exit taps inserted.
pub fn tap_segments(graph: &DFGraph, segments: &[CheckSegment]) -> Result<DFGraph, RccError> {
    let extra = segments
        .iter()
        .flat_map(|s| s.entry_exports.iter().chain(&s.exit_exports))
        .map(|t| DFNode {
            id: t.export,
            op: Op::Export,
            operands: vec![t.tapped],
            value: None,
            ty: ScalarType::Int16,
        })
        .collect();
    Ok(graph.extended(extra, graph.outputs().to_vec())?)
}

use super::sentinel::check_site;
use super::{FbcError, Sentinel, Step};
use crate::ir::{DFGraph, DFNode, NodeId, Op, Scalar, ScalarType};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentinelTaps {
    pub entrance: NodeId,
    pub exit: NodeId,
}

/// A program with sentinel branches attached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstrumentedGraph {
    pub graph: DFGraph,
    pub sentinels: Vec<Sentinel>,
    /// Export ids per sentinel, in sentinel order.
    pub taps: Vec<SentinelTaps>,
}

/// Grafts every sentinel onto `graph`: an entrance export at the site, the
/// `2n` steps fed from it (operands as constants) and an exit export. New
/// nodes get ids above the original maximum; no original node gains an
/// operand from the branch.
pub fn instrument(graph: &DFGraph, sentinels: Vec<Sentinel>) -> Result<InstrumentedGraph, FbcError> {
    let mut seen = HashSet::new();
    for s in &sentinels {
        check_site(graph, s.site)?;
        if !seen.insert(s.site) {
            return Err(FbcError::Site {
                site: s.site,
                reason: "more than one sentinel at this site".into(),
            });
        }
    }
    if sentinels.is_empty() {
        return Ok(InstrumentedGraph {
            graph: graph.clone(),
            sentinels,
            taps: Vec::new(),
        });
    }

    let mut next = graph.max_id().0 + 1;
    let mut fresh = || {
        let id = NodeId(next);
        next += 1;
        id
    };
    let float = |id, op, operands: Vec<NodeId>| DFNode {
        id,
        op,
        operands,
        value: None,
        ty: ScalarType::Float64,
    };
    let mut extra = Vec::new();
    let mut taps = Vec::with_capacity(sentinels.len());
    for s in &sentinels {
        let entrance = fresh();
        extra.push(float(entrance, Op::Export, vec![s.site]));
        let mut cur = entrance;
        for step in s.steps() {
            let (op, operand) = match step {
                Step::Add(r) => (Op::Add, Some(r)),
                Step::Sub(r) => (Op::Sub, Some(r)),
                Step::Mul(r) => (Op::Mul, Some(r)),
                Step::Div(r) => (Op::Div, Some(r)),
                Step::Arctan => (Op::Arctan, None),
                Step::Tan => (Op::Tan, None),
            };
            let operands = match operand {
                Some(r) => {
                    let c = fresh();
                    extra.push(DFNode {
                        id: c,
                        op: Op::Const,
                        operands: Vec::new(),
                        value: Some(Scalar::Float(r)),
                        ty: ScalarType::Float64,
                    });
                    vec![cur, c]
                }
                None => vec![cur],
            };
            let id = fresh();
            extra.push(float(id, op, operands));
            cur = id;
        }
        let exit = fresh();
        extra.push(float(exit, Op::Export, vec![cur]));
        taps.push(SentinelTaps { entrance, exit });
    }
    Ok(InstrumentedGraph {
        graph: graph.extended(extra, graph.outputs().to_vec())?,
        sentinels,
        taps,
    })
}

/// Automatic sentinel sites: float add/sub nodes (the accumulation points of
/// dot products), or every float arithmetic node if there are none.
pub fn site_candidates(graph: &DFGraph) -> Vec<NodeId> {
    let float_nodes = || graph.nodes().iter().filter(|n| n.ty == ScalarType::Float64);
    let acc: Vec<NodeId> = float_nodes()
        .filter(|n| matches!(n.op, Op::Add | Op::Sub))
        .map(|n| n.id)
        .collect();
    if !acc.is_empty() {
        return acc;
    }
    float_nodes()
        .filter(|n| n.op.is_arithmetic() || n.op.unary().is_some())
        .map(|n| n.id)
        .collect()
}

/// `count` distinct automatic sites, chosen uniformly.
pub fn choose_sites<R: Rng + ?Sized>(graph: &DFGraph, count: usize, rng: &mut R) -> Result<Vec<NodeId>, FbcError> {
    let candidates = site_candidates(graph);
    if candidates.len() < count {
        return Err(FbcError::Config(format!(
            "asked for {count} sites but the program has {} float arithmetic candidates",
            candidates.len()
        )));
    }
    Ok(candidates.choose_multiple(rng, count).copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::ArithBackend;
    use crate::fbc::{make_sentinel, SentinelKind};
    use crate::ir::{census, evaluate, BuiltinSpec};

    fn small_conv() -> DFGraph {
        BuiltinSpec::ConvLayer {
            channels: 2,
            kernel: 2,
            size: 4,
            out_channels: 1,
            seed: 3,
        }
        .build()
        .unwrap()
    }

    #[test]
    fn addition_sentinel_adds_six_ops_and_two_exports() {
        let g = small_conv();
        let site = site_candidates(&g)[0];
        let mut rng = crate::rng::substream(1, "t", 0);
        let s = make_sentinel(&g, SentinelKind::Addition, 3, site, 1e-13, &mut rng).unwrap();
        let ig = instrument(&g, vec![s]).unwrap();
        let before = census(&g);
        let after = census(&ig.graph);
        assert_eq!(after.total - before.total, 6);
        let exports = |g: &DFGraph| g.nodes().iter().filter(|n| n.op == Op::Export).count();
        assert_eq!(exports(&ig.graph), 2);

        let mut rng = crate::rng::substream(2, "inputs", 0);
        let x = BuiltinSpec::ConvLayer {
            channels: 2,
            kernel: 2,
            size: 4,
            out_channels: 1,
            seed: 3,
        }
        .sample_inputs(&mut rng);
        let plain = evaluate(&g, &x, &ArithBackend::exact()).unwrap();
        let tapped = evaluate(&ig.graph, &x, &ArithBackend::exact()).unwrap();
        assert_eq!(plain.outputs.len(), tapped.outputs.len());
        assert!(plain.outputs.iter().zip(&tapped.outputs).all(|(a, b)| a.bit_eq(*b)));
    }

    #[test]
    fn no_sentinels_no_change() {
        let g = small_conv();
        assert_eq!(instrument(&g, vec![]).unwrap().graph, g);
    }

    #[test]
    fn duplicate_sites_rejected() {
        let g = small_conv();
        let site = site_candidates(&g)[0];
        let mut rng = crate::rng::substream(1, "t", 0);
        let a = make_sentinel(&g, SentinelKind::Addition, 3, site, 1e-13, &mut rng).unwrap();
        let b = make_sentinel(&g, SentinelKind::Multiplication, 3, site, 1e-13, &mut rng).unwrap();
        assert!(matches!(instrument(&g, vec![a, b]), Err(FbcError::Site { .. })));
    }

    #[test]
    fn branches_feed_nothing_original() {
        let g = small_conv();
        let mut rng = crate::rng::substream(4, "t", 0);
        let sites = choose_sites(&g, 3, &mut rng).unwrap();
        let sentinels = sites
            .iter()
            .zip(SentinelKind::ALL)
            .map(|(&site, kind)| make_sentinel(&g, kind, 3, site, 1e-13, &mut rng).unwrap())
            .collect();
        let ig = instrument(&g, sentinels).unwrap();
        let original_max = g.max_id();
        for n in ig.graph.nodes() {
            if n.id <= original_max {
                assert!(n.operands.iter().all(|o| *o <= original_max));
            }
        }
    }

    #[test]
    fn candidates_are_accumulations() {
        let g = small_conv();
        let c = site_candidates(&g);
        // 3x3 outputs, each a chain of 8 products and 7 additions.
        assert_eq!(c.len(), 9 * 7);
        assert!(c.iter().all(|id| g.node(*id).unwrap().op == Op::Add));
    }
}

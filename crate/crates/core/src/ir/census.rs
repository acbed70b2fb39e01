use super::{DFGraph, Op};
use serde::{Deserialize, Serialize};

/// Arithmetic operation counts. `total` covers add/sub, mul and div;
/// tan and arctan are tallied separately as `unary`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCensus {
    pub add_sub: usize,
    pub mul: usize,
    pub div: usize,
    pub unary: usize,
    pub total: usize,
}

pub fn census(graph: &DFGraph) -> OpCensus {
    let mut c = OpCensus::default();
    for n in graph.nodes() {
        match n.op {
            Op::Add | Op::Sub => c.add_sub += 1,
            Op::Mul => c.mul += 1,
            Op::Div => c.div += 1,
            Op::Tan | Op::Arctan => c.unary += 1,
            _ => {}
        }
    }
    c.total = c.add_sub + c.mul + c.div;
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{GraphBuilder, ScalarType};

    #[test]
    fn counts_by_category() {
        let mut b = GraphBuilder::new("c", ScalarType::Float64);
        let x = b.input(ScalarType::Float64);
        let y = b.mul(x, x);
        let z = b.sub(y, x);
        let w = b.div(z, x);
        let t = b.tan(w);
        let u = b.add(t, y);
        b.output(u);
        let c = census(&b.build().unwrap());
        assert_eq!(
            c,
            OpCensus {
                add_sub: 2,
                mul: 1,
                div: 1,
                unary: 1,
                total: 4
            }
        );
    }
}

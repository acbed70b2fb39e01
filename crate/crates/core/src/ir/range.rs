use super::{DFGraph, IrError, Op, ScalarType};

/// Closed integer interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: i64,
    pub hi: i64,
}

impl Interval {
    pub const INT16: Interval = Interval {
        lo: i16::MIN as i64,
        hi: i16::MAX as i64,
    };

    pub fn new(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(v: i64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn fits_int16(self) -> bool {
        self.lo >= Self::INT16.lo && self.hi <= Self::INT16.hi
    }

    pub fn contains(self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }

    fn add(self, o: Interval) -> Interval {
        Interval::new(self.lo.saturating_add(o.lo), self.hi.saturating_add(o.hi))
    }

    fn sub(self, o: Interval) -> Interval {
        Interval::new(self.lo.saturating_sub(o.hi), self.hi.saturating_sub(o.lo))
    }

    fn mul(self, o: Interval) -> Interval {
        let c = [
            self.lo.saturating_mul(o.lo),
            self.lo.saturating_mul(o.hi),
            self.hi.saturating_mul(o.lo),
            self.hi.saturating_mul(o.hi),
        ];
        Interval::new(*c.iter().min().unwrap(), *c.iter().max().unwrap())
    }

    fn div(self, o: Interval) -> Interval {
        // Truncating division never grows the magnitude of the dividend.
        let m = self.lo.unsigned_abs().max(self.hi.unsigned_abs()) as i64;
        if o.contains(0) {
            return Interval::new(-m, m);
        }
        let c = [self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi];
        Interval::new(*c.iter().min().unwrap(), *c.iter().max().unwrap())
    }
}

/// Exact-arithmetic value range of every int16 node (by topological slot),
/// given a range per program input. Float nodes map to `None`; ranges for
/// float inputs are ignored.
///
/// A program whose every range fits in int16 cannot overflow on those inputs.
pub fn int_ranges(graph: &DFGraph, input_ranges: &[Interval]) -> Result<Vec<Option<Interval>>, IrError> {
    if input_ranges.len() != graph.inputs().len() {
        return Err(IrError::Input(format!(
            "expected {} input ranges, got {}",
            graph.inputs().len(),
            input_ranges.len()
        )));
    }
    let mut out: Vec<Option<Interval>> = vec![None; graph.len()];
    for (id, r) in graph.inputs().iter().zip(input_ranges) {
        let slot = graph.slot(*id).expect("validated");
        if graph.nodes()[slot].ty == ScalarType::Int16 {
            out[slot] = Some(*r);
        }
    }
    for (i, n) in graph.nodes().iter().enumerate() {
        if n.ty != ScalarType::Int16 || n.op == Op::Input {
            continue;
        }
        let ops: Vec<Option<Interval>> = graph.operand_slots(i).iter().map(|&s| out[s]).collect();
        out[i] = Some(match n.op {
            Op::Const => Interval::point(n.value.and_then(|v| v.as_int()).expect("int const") as i64),
            Op::Convert => Interval::INT16,
            Op::Output | Op::Export => ops[0].expect("int operand"),
            Op::Add => ops[0].unwrap().add(ops[1].unwrap()),
            Op::Sub => ops[0].unwrap().sub(ops[1].unwrap()),
            Op::Mul => ops[0].unwrap().mul(ops[1].unwrap()),
            Op::Div => ops[0].unwrap().div(ops[1].unwrap()),
            Op::Input | Op::Tan | Op::Arctan => unreachable!("handled above or float-only"),
        });
    }
    Ok(out)
}

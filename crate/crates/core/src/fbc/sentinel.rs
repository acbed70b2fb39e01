use super::FbcError;
use crate::ir::{DFGraph, NodeId, ScalarType};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentinelKind {
    Addition,
    Multiplication,
    TanArctan,
}

impl SentinelKind {
    pub const ALL: [SentinelKind; 3] = [SentinelKind::Addition, SentinelKind::Multiplication, SentinelKind::TanArctan];
}

impl fmt::Display for SentinelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SentinelKind::Addition => "addition",
            SentinelKind::Multiplication => "multiplication",
            SentinelKind::TanArctan => "tan_arctan",
        })
    }
}

impl FromStr for SentinelKind {
    type Err = FbcError;

    fn from_str(s: &str) -> Result<Self, FbcError> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "add" | "addition" => Ok(SentinelKind::Addition),
            "mul" | "multiplication" => Ok(SentinelKind::Multiplication),
            "tan" | "tan_arctan" | "tanarctan" => Ok(SentinelKind::TanArctan),
            _ => Err(FbcError::Config(format!("unknown sentinel kind {s:?} (use add, mul or tan)"))),
        }
    }
}

/// How the round-trip error is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    /// `|I - R|`
    #[default]
    Absolute,
    /// `|I - R| / max(|I|, smallest normal)`
    Relative,
}

impl DistanceMetric {
    pub fn distance(self, input: f64, returned: f64) -> f64 {
        let d = (input - returned).abs();
        match self {
            DistanceMetric::Absolute => d,
            DistanceMetric::Relative => d / input.abs().max(f64::MIN_POSITIVE),
        }
    }
}

/// One step of a sentinel chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Step {
    Add(f64),
    Sub(f64),
    Mul(f64),
    Div(f64),
    Arctan,
    Tan,
}

impl Step {
    pub fn inverse(self) -> Step {
        match self {
            Step::Add(r) => Step::Sub(r),
            Step::Sub(r) => Step::Add(r),
            Step::Mul(r) => Step::Div(r),
            Step::Div(r) => Step::Mul(r),
            Step::Arctan => Step::Tan,
            Step::Tan => Step::Arctan,
        }
    }
}

/// A forward chain of `n` steps grafted at `site`, followed by its inverse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sentinel {
    pub kind: SentinelKind,
    pub n: usize,
    /// Step operands in (0, 1); empty for tan-arctan.
    pub operands: Vec<f64>,
    pub site: NodeId,
    pub delta: f64,
    #[serde(default)]
    pub metric: DistanceMetric,
}

impl Sentinel {
    pub fn forward(&self) -> Vec<Step> {
        match self.kind {
            SentinelKind::Addition => self.operands.iter().map(|&r| Step::Add(r)).collect(),
            SentinelKind::Multiplication => self.operands.iter().map(|&r| Step::Mul(r)).collect(),
            SentinelKind::TanArctan => vec![Step::Arctan],
        }
    }

    pub fn backward(&self) -> Vec<Step> {
        self.forward().into_iter().rev().map(Step::inverse).collect()
    }

    /// All `2n` steps in execution order.
    pub fn steps(&self) -> Vec<Step> {
        let mut s = self.forward();
        s.extend(self.backward());
        s
    }

    /// Pass condition is `distance < delta`; NaN distances fail.
    pub fn is_positive(&self, distance: f64) -> bool {
        !(distance < self.delta)
    }
}

/// Uniform draw from the open interval (0, 1) whose mantissa bits are all
/// random, including for small values where a plain 53-bit draw would leave
/// trailing zeros.
pub fn unit_operand<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let k = loop {
        let k = rng.gen::<u64>() >> 11;
        if k != 0 {
            break k;
        }
    };
    let x = k as f64 * f64::EPSILON / 2.0;
    let exponent = ((x.to_bits() >> 52) & 0x7ff) as i64 - 1023;
    let missing = -1 - exponent;
    if missing > 0 {
        let fill = rng.gen::<u64>() & ((1u64 << missing) - 1);
        f64::from_bits(x.to_bits() | fill)
    } else {
        x
    }
}

pub fn make_sentinel<R: Rng + ?Sized>(
    graph: &DFGraph,
    kind: SentinelKind,
    n: usize,
    site: NodeId,
    delta: f64,
    rng: &mut R,
) -> Result<Sentinel, FbcError> {
    check_site(graph, site)?;
    if n == 0 {
        return Err(FbcError::Config("a sentinel needs at least one step per direction".into()));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(FbcError::Config(format!("delta must be finite and non-negative, got {delta}")));
    }
    let (n, operands) = match kind {
        SentinelKind::TanArctan => (1, Vec::new()),
        _ => (n, (0..n).map(|_| unit_operand(rng)).collect()),
    };
    Ok(Sentinel {
        kind,
        n,
        operands,
        site,
        delta,
        metric: DistanceMetric::Absolute,
    })
}

pub(crate) fn check_site(graph: &DFGraph, site: NodeId) -> Result<(), FbcError> {
    match graph.node(site) {
        None => Err(FbcError::Site {
            site,
            reason: "no such node".into(),
        }),
        Some(n) if n.ty != ScalarType::Float64 => Err(FbcError::Site {
            site,
            reason: "sentinels attach to float64 nodes only; integer programs are covered by the residue check".into(),
        }),
        Some(_) => Ok(()),
    }
}

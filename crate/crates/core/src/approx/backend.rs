use super::{add16, div16, mul16, sub16, AdderModel, ApproxError, FpTruncModel, MultiplierModel};
use crate::ir::{Arithmetic, BinaryOp, EvalErrorKind, NodeId, UnaryFn};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Paradigm {
    Accurate,
    Approximate,
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Paradigm::Accurate => "accurate",
            Paradigm::Approximate => "approximate",
        })
    }
}

/// An adder/multiplier pairing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitCombo {
    pub adder: AdderModel,
    pub multiplier: MultiplierModel,
}

impl UnitCombo {
    /// {LOA(4), TruncAdd(6), SegmentedCarry(4)} x {TruncMul(4), BrokenArray(4), LogApprox}.
    pub fn defaults() -> Vec<UnitCombo> {
        let adders = [
            AdderModel::Loa { k: 4 },
            AdderModel::TruncAdd { k: 6 },
            AdderModel::SegmentedCarry { k: 4 },
        ];
        let muls = [
            MultiplierModel::TruncMul { k: 4 },
            MultiplierModel::BrokenArray { k: 4 },
            MultiplierModel::LogApprox,
        ];
        adders
            .iter()
            .flat_map(|&adder| muls.iter().map(move |&multiplier| UnitCombo { adder, multiplier }))
            .collect()
    }

    /// The default pairing with the smallest unit-level error: LOA(4) with
    /// BrokenArray(4).
    pub fn mildest() -> UnitCombo {
        UnitCombo {
            adder: AdderModel::Loa { k: 4 },
            multiplier: MultiplierModel::BrokenArray { k: 4 },
        }
    }
}

impl fmt::Display for UnitCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.adder, self.multiplier)
    }
}

/// `adder+multiplier`, e.g. `loa:4+log` or `LOA(4)+TruncMul(4)`.
impl FromStr for UnitCombo {
    type Err = ApproxError;

    fn from_str(s: &str) -> Result<Self, ApproxError> {
        let (a, m) = s
            .split_once('+')
            .ok_or_else(|| ApproxError::InvalidModel(format!("expected adder+multiplier, got {s:?}")))?;
        Ok(UnitCombo {
            adder: a.parse()?,
            multiplier: m.parse()?,
        })
    }
}

/// One arithmetic paradigm: the unit models used for every node of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawBackend")]
pub struct ArithBackend {
    pub paradigm: Paradigm,
    pub adder: AdderModel,
    pub multiplier: MultiplierModel,
    #[serde(rename = "fp_trunc_bits")]
    pub fp: FpTruncModel,
    /// Reserved for stochastic models; none of the current models use it.
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBackend {
    paradigm: Option<Paradigm>,
    #[serde(default = "exact_adder")]
    adder: AdderModel,
    #[serde(default = "exact_multiplier")]
    multiplier: MultiplierModel,
    #[serde(default)]
    fp_trunc_bits: u8,
    #[serde(default)]
    seed: u64,
}

fn exact_adder() -> AdderModel {
    AdderModel::Exact
}

fn exact_multiplier() -> MultiplierModel {
    MultiplierModel::Exact
}

impl TryFrom<RawBackend> for ArithBackend {
    type Error = ApproxError;

    fn try_from(r: RawBackend) -> Result<Self, ApproxError> {
        let fp = FpTruncModel::new(r.fp_trunc_bits)?;
        let mut b = match r.paradigm {
            Some(Paradigm::Accurate) => ArithBackend::exact(),
            _ => ArithBackend::approximate(r.adder, r.multiplier, fp)?,
        };
        if r.paradigm == Some(Paradigm::Accurate)
            && (r.adder != AdderModel::Exact || r.multiplier != MultiplierModel::Exact || r.fp_trunc_bits != 0)
        {
            return Err(ApproxError::InvalidModel("an accurate backend must use exact units".into()));
        }
        b.seed = r.seed;
        Ok(b)
    }
}

impl ArithBackend {
    pub fn exact() -> Self {
        ArithBackend {
            paradigm: Paradigm::Accurate,
            adder: AdderModel::Exact,
            multiplier: MultiplierModel::Exact,
            fp: FpTruncModel::EXACT,
            seed: 0,
        }
    }

    pub fn approximate(adder: AdderModel, multiplier: MultiplierModel, fp: FpTruncModel) -> Result<Self, ApproxError> {
        Ok(ArithBackend {
            paradigm: Paradigm::Approximate,
            adder: adder.validate()?,
            multiplier: multiplier.validate()?,
            fp: FpTruncModel::new(fp.truncated_bits)?,
            seed: 0,
        })
    }

    pub fn integer(combo: UnitCombo) -> Result<Self, ApproxError> {
        Self::approximate(combo.adder, combo.multiplier, FpTruncModel::EXACT)
    }

    pub fn float(truncated_bits: u8) -> Result<Self, ApproxError> {
        Self::approximate(AdderModel::Exact, MultiplierModel::Exact, FpTruncModel::new(truncated_bits)?)
    }

    pub fn is_accurate(&self) -> bool {
        self.paradigm == Paradigm::Accurate
    }
}

impl fmt::Display for ArithBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_accurate() {
            return f.write_str("exact");
        }
        let mut parts = Vec::new();
        if !self.adder.is_exact() {
            parts.push(self.adder.to_string());
        }
        if !self.multiplier.is_exact() {
            parts.push(self.multiplier.to_string());
        }
        if self.fp.truncated_bits > 0 {
            parts.push(format!("FpTrunc({})", self.fp.truncated_bits));
        }
        if parts.is_empty() {
            return f.write_str("approximate(no-op)");
        }
        f.write_str(&parts.join("+"))
    }
}

impl Arithmetic for ArithBackend {
    fn int_binary(&self, _node: NodeId, op: BinaryOp, a: i16, b: i16) -> Result<i16, EvalErrorKind> {
        let (adder, mul) = if self.is_accurate() {
            (AdderModel::Exact, MultiplierModel::Exact)
        } else {
            (self.adder, self.multiplier)
        };
        match op {
            BinaryOp::Add => Ok(add16(adder, a, b)),
            BinaryOp::Sub => Ok(sub16(adder, a, b)),
            BinaryOp::Mul => Ok(mul16(mul, a, b)),
            BinaryOp::Div => div16(a, b).ok_or(EvalErrorKind::DivByZero),
        }
    }

    fn float_binary(&self, _node: NodeId, op: BinaryOp, a: f64, b: f64) -> Result<f64, EvalErrorKind> {
        let fp = if self.is_accurate() { FpTruncModel::EXACT } else { self.fp };
        fp.binary(op, a, b).map_err(|_| EvalErrorKind::DivByZero)
    }

    fn float_unary(&self, _node: NodeId, f: UnaryFn, x: f64) -> Result<f64, EvalErrorKind> {
        let fp = if self.is_accurate() { FpTruncModel::EXACT } else { self.fp };
        Ok(fp.unary(f, x))
    }
}

use super::ApproxError;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// 16-bit adder model.
///
/// A parameter of 0 (or a segment width of 16) degenerates to the exact adder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdderModel {
    Exact,
    /// Lower-part OR adder: the low `k` bits are `a | b`, the high part is
    /// added exactly with no carry in.
    Loa { k: u8 },
    /// Low `k` bits of both operands are zeroed before an exact add.
    TruncAdd { k: u8 },
    /// Sum computed in independent `k`-bit segments; carries between segments
    /// are dropped.
    SegmentedCarry { k: u8 },
}

/// 16-bit multiplier model, applied to operand magnitudes (sign-magnitude).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MultiplierModel {
    Exact,
    /// Partial products of the `k` low bits of `b` are discarded.
    TruncMul { k: u8 },
    /// The `k` least significant columns of the partial-product array are dropped.
    BrokenArray { k: u8 },
    /// Mitchell's logarithmic multiplier.
    LogApprox,
}

impl AdderModel {
    pub fn validate(self) -> Result<Self, ApproxError> {
        match self {
            AdderModel::Loa { k } | AdderModel::TruncAdd { k } if k > 15 => {
                Err(ApproxError::InvalidModel(format!("{self}: k must be at most 15")))
            }
            AdderModel::SegmentedCarry { k } if !(1..=16).contains(&k) => {
                Err(ApproxError::InvalidModel(format!("{self}: segment width must be in 1..=16")))
            }
            _ => Ok(self),
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(
            self,
            AdderModel::Exact | AdderModel::Loa { k: 0 } | AdderModel::TruncAdd { k: 0 } | AdderModel::SegmentedCarry { k: 16 }
        )
    }
}

impl MultiplierModel {
    pub fn validate(self) -> Result<Self, ApproxError> {
        match self {
            MultiplierModel::TruncMul { k } if k > 15 => {
                Err(ApproxError::InvalidModel(format!("{self}: k must be at most 15")))
            }
            MultiplierModel::BrokenArray { k } if k > 31 => {
                Err(ApproxError::InvalidModel(format!("{self}: k must be at most 31")))
            }
            _ => Ok(self),
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(
            self,
            MultiplierModel::Exact | MultiplierModel::TruncMul { k: 0 } | MultiplierModel::BrokenArray { k: 0 }
        )
    }
}

impl fmt::Display for AdderModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdderModel::Exact => f.write_str("Exact"),
            AdderModel::Loa { k } => write!(f, "LOA({k})"),
            AdderModel::TruncAdd { k } => write!(f, "TruncAdd({k})"),
            AdderModel::SegmentedCarry { k } => write!(f, "SegmentedCarry({k})"),
        }
    }
}

impl fmt::Display for MultiplierModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MultiplierModel::Exact => f.write_str("Exact"),
            MultiplierModel::TruncMul { k } => write!(f, "TruncMul({k})"),
            MultiplierModel::BrokenArray { k } => write!(f, "BrokenArray({k})"),
            MultiplierModel::LogApprox => f.write_str("LogApprox"),
        }
    }
}

/// Splits `loa:4`, `LOA(4)` or `exact` into a lowercase name and optional parameter.
fn split_model(s: &str) -> Result<(String, Option<u8>), ApproxError> {
    let norm = s.trim().to_ascii_lowercase().replace('(', ":").replace(')', "");
    let (name, param) = norm.split_once(':').unwrap_or((&norm, ""));
    let param = match param.trim() {
        "" => None,
        p => Some(
            p.parse::<u8>()
                .map_err(|_| ApproxError::InvalidModel(format!("bad parameter in {s:?}")))?,
        ),
    };
    Ok((name.trim().replace(['-', '_'], ""), param))
}

impl FromStr for AdderModel {
    type Err = ApproxError;

    fn from_str(s: &str) -> Result<Self, ApproxError> {
        let (name, k) = split_model(s)?;
        let need = || k.ok_or_else(|| ApproxError::InvalidModel(format!("{s:?} needs a parameter, e.g. {name}:4")));
        let m = match name.as_str() {
            "exact" => AdderModel::Exact,
            "loa" => AdderModel::Loa { k: need()? },
            "trunc" | "truncadd" => AdderModel::TruncAdd { k: need()? },
            "seg" | "segmented" | "segmentedcarry" => AdderModel::SegmentedCarry { k: need()? },
            _ => return Err(ApproxError::InvalidModel(format!("unknown adder {s:?}"))),
        };
        m.validate()
    }
}

impl FromStr for MultiplierModel {
    type Err = ApproxError;

    fn from_str(s: &str) -> Result<Self, ApproxError> {
        let (name, k) = split_model(s)?;
        let need = || k.ok_or_else(|| ApproxError::InvalidModel(format!("{s:?} needs a parameter, e.g. {name}:4")));
        let m = match name.as_str() {
            "exact" => MultiplierModel::Exact,
            "trunc" | "truncmul" => MultiplierModel::TruncMul { k: need()? },
            "broken" | "brokenarray" => MultiplierModel::BrokenArray { k: need()? },
            "log" | "logapprox" | "mitchell" => MultiplierModel::LogApprox,
            _ => return Err(ApproxError::InvalidModel(format!("unknown multiplier {s:?}"))),
        };
        m.validate()
    }
}

fn low_mask(k: u8) -> u32 {
    (1u32 << k) - 1
}

/// Unwrapped (17-bit) sum of two 16-bit patterns under `model`.
pub fn add_unsigned(model: AdderModel, a: u16, b: u16) -> u32 {
    let (a, b) = (a as u32, b as u32);
    match model {
        AdderModel::Exact => a + b,
        AdderModel::Loa { k } => (((a >> k) + (b >> k)) << k) | ((a | b) & low_mask(k)),
        AdderModel::TruncAdd { k } => (a & !low_mask(k)) + (b & !low_mask(k)),
        AdderModel::SegmentedCarry { k } => {
            let mut out = 0;
            let mut lo = 0;
            while lo < 16 {
                let width = k.min(16 - lo);
                let m = low_mask(width);
                let part = ((a >> lo) & m) + ((b >> lo) & m);
                // The carry out of the top segment is the ordinary overflow bit.
                let keep = if lo + width >= 16 { part } else { part & m };
                out |= keep << lo;
                lo += width;
            }
            out
        }
    }
}

pub fn add16(model: AdderModel, a: i16, b: i16) -> i16 {
    add_unsigned(model, a as u16, b as u16) as u16 as i16
}

/// `a - b` through the adder on the two's-complement negation of `b`.
pub fn sub16(model: AdderModel, a: i16, b: i16) -> i16 {
    add16(model, a, b.wrapping_neg())
}

/// Approximate unsigned product of two magnitudes (at most 2^15 each).
pub fn mul_magnitude(model: MultiplierModel, a: u32, b: u32) -> u64 {
    let (a, b) = (a as u64, b as u64);
    match model {
        MultiplierModel::Exact => a * b,
        MultiplierModel::TruncMul { k } => a * (b & !(low_mask(k) as u64)),
        MultiplierModel::BrokenArray { k } => {
            let keep = !((1u64 << k) - 1);
            (0..32).filter(|j| b >> j & 1 == 1).map(|j| (a << j) & keep).sum()
        }
        MultiplierModel::LogApprox => mitchell(a, b),
    }
}

/// Mitchell's approximation `2^(log a + log b)` with piecewise-linear logs,
/// evaluated exactly in integers.
fn mitchell(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    let k1 = 63 - a.leading_zeros();
    let k2 = 63 - b.leading_zeros();
    let f1 = a - (1 << k1);
    let f2 = b - (1 << k2);
    let s = (f1 << k2) + (f2 << k1);
    if s < 1 << (k1 + k2) {
        (1 << (k1 + k2)) + s
    } else {
        2 * s
    }
}

/// Signed product: the model is applied to magnitudes, the sign restored,
/// and the result wrapped to 16 bits.
pub fn mul16(model: MultiplierModel, a: i16, b: i16) -> i16 {
    let p = mul_magnitude(model, a.unsigned_abs() as u32, b.unsigned_abs() as u32);
    let p = if (a < 0) != (b < 0) { p.wrapping_neg() } else { p };
    p as u16 as i16
}

/// Exact truncating division; `None` for a zero divisor.
pub fn div16(a: i16, b: i16) -> Option<i16> {
    (b != 0).then(|| a.wrapping_div(b))
}

use super::ApproxError;
use crate::ir::{BinaryOp, UnaryFn};
use serde::{Deserialize, Serialize};

/// Floating-point approximation by operand mantissa truncation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FpTruncModel {
    pub truncated_bits: u8,
}

impl FpTruncModel {
    pub const EXACT: FpTruncModel = FpTruncModel { truncated_bits: 0 };

    pub fn new(truncated_bits: u8) -> Result<Self, ApproxError> {
        if truncated_bits > 52 {
            return Err(ApproxError::InvalidModel(format!(
                "truncated_bits must be in 0..=52, got {truncated_bits}"
            )));
        }
        Ok(FpTruncModel { truncated_bits })
    }

    pub fn truncate(self, x: f64) -> f64 {
        trunc_mantissa(x, self.truncated_bits as u32)
    }

    pub fn binary(self, op: BinaryOp, a: f64, b: f64) -> Result<f64, ApproxError> {
        let (a, b) = (self.truncate(a), self.truncate(b));
        Ok(match op {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div if b == 0.0 => return Err(ApproxError::DivByZero),
            BinaryOp::Div => a / b,
        })
    }

    pub fn unary(self, f: UnaryFn, x: f64) -> f64 {
        let x = self.truncate(x);
        match f {
            UnaryFn::Tan => x.tan(),
            UnaryFn::Arctan => x.atan(),
        }
    }
}

/// Clears the low `k` mantissa bits. NaN and infinities pass through.
pub fn trunc_mantissa(x: f64, k: u32) -> f64 {
    assert!(k <= 52, "at most 52 mantissa bits can be truncated");
    if !x.is_finite() {
        return x;
    }
    f64::from_bits(x.to_bits() & !((1u64 << k) - 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FpOp {
    Add,
    Sub,
    Mul,
    Div,
    Tan,
    Arctan,
}

/// Applies `op` to mantissa-truncated operands in exact double arithmetic.
pub fn fp_op(model: FpTruncModel, op: FpOp, operands: &[f64]) -> Result<f64, ApproxError> {
    let want = match op {
        FpOp::Tan | FpOp::Arctan => 1,
        _ => 2,
    };
    if operands.len() != want {
        return Err(ApproxError::Arity {
            expected: want,
            got: operands.len(),
        });
    }
    let bin = |o| model.binary(o, operands[0], operands[1]);
    match op {
        FpOp::Add => bin(BinaryOp::Add),
        FpOp::Sub => bin(BinaryOp::Sub),
        FpOp::Mul => bin(BinaryOp::Mul),
        FpOp::Div => bin(BinaryOp::Div),
        FpOp::Tan => Ok(model.unary(UnaryFn::Tan, operands[0])),
        FpOp::Arctan => Ok(model.unary(UnaryFn::Arctan, operands[0])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(k: u8) -> FpTruncModel {
        FpTruncModel::new(k).unwrap()
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(trunc_mantissa(1.0 + f64::EPSILON, 20), 1.0);
        assert_eq!(trunc_mantissa(1.5, 10), 1.5);
        let pi = std::f64::consts::PI;
        let t = trunc_mantissa(pi, 20);
        assert_eq!(t.to_bits(), pi.to_bits() & !0xF_FFFF);
        assert!(pi - t < 2f64.powi(-31));
        assert!(trunc_mantissa(f64::NAN, 10).is_nan());
        assert_eq!(trunc_mantissa(f64::NEG_INFINITY, 52), f64::NEG_INFINITY);
    }

    #[test]
    fn fp_op_examples() {
        assert_eq!(fp_op(m(0), FpOp::Add, &[0.1, 0.2]).unwrap().to_bits(), (0.1f64 + 0.2).to_bits());
        // Both operands lose their whole mantissa: 1.999.. -> 1.0 and 3.0 -> 2.0.
        assert_eq!(fp_op(m(52), FpOp::Mul, &[2.0 - f64::EPSILON, 3.0]).unwrap(), 2.0);
        let x = 0.123456789;
        assert_eq!(fp_op(m(20), FpOp::Add, &[x, 0.0]).unwrap(), trunc_mantissa(x, 20));
        assert_eq!(fp_op(m(10), FpOp::Div, &[1.0, 0.0]), Err(ApproxError::DivByZero));
        assert!(matches!(fp_op(m(10), FpOp::Tan, &[1.0, 2.0]), Err(ApproxError::Arity { .. })));
        assert!(FpTruncModel::new(53).is_err());
    }
}

use super::ApproxError;
use crate::ir::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    /// Mean relative error.
    pub mre: f64,
    pub max_rel_err: f64,
    /// Fraction of samples where the approximate value equals the exact one.
    pub zero_error_fraction: f64,
    pub samples: usize,
}

/// Relative error `|approx - exact| / max(|exact|, eps)`, with `eps = 1` for
/// integers and the smallest normal double for floats.
pub fn error_stats(exact: &[Scalar], approx: &[Scalar]) -> Result<ErrorStats, ApproxError> {
    if exact.len() != approx.len() {
        return Err(ApproxError::Stats(format!(
            "length mismatch: {} exact vs {} approximate",
            exact.len(),
            approx.len()
        )));
    }
    if exact.is_empty() {
        return Err(ApproxError::Stats("no samples".into()));
    }
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    let mut zero = 0usize;
    for (i, (e, a)) in exact.iter().zip(approx).enumerate() {
        let (e, a, eps) = match (e, a) {
            (Scalar::Int(e), Scalar::Int(a)) => (*e as f64, *a as f64, 1.0),
            (Scalar::Float(e), Scalar::Float(a)) => (*e, *a, f64::MIN_POSITIVE),
            _ => return Err(ApproxError::Stats(format!("sample {i} mixes int and float"))),
        };
        if a == e {
            zero += 1;
        }
        let rel = (a - e).abs() / e.abs().max(eps);
        sum += rel;
        max = max.max(rel);
    }
    Ok(ErrorStats {
        mre: sum / exact.len() as f64,
        max_rel_err: max,
        zero_error_fraction: zero as f64 / exact.len() as f64,
        samples: exact.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i16]) -> Vec<Scalar> {
        v.iter().map(|&x| Scalar::Int(x)).collect()
    }

    #[test]
    fn hand_examples() {
        let s = error_stats(&ints(&[10, 10]), &ints(&[10, 11])).unwrap();
        assert!((s.mre - 0.05).abs() < 1e-15);
        assert_eq!(s.zero_error_fraction, 0.5);
        assert!((s.max_rel_err - 0.1).abs() < 1e-15);
        let s = error_stats(&ints(&[3, -4]), &ints(&[3, -4])).unwrap();
        assert_eq!((s.mre, s.zero_error_fraction), (0.0, 1.0));
        // Exact zero uses eps = 1.
        let s = error_stats(&ints(&[0]), &ints(&[2])).unwrap();
        assert_eq!(s.mre, 2.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(error_stats(&ints(&[1]), &ints(&[1, 2])).is_err());
        assert!(error_stats(&[], &[]).is_err());
        assert!(error_stats(&ints(&[1]), &[Scalar::Float(1.0)]).is_err());
    }
}

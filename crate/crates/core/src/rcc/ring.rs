use super::RccError;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Canonical representative of a residue class: `0 <= value < modulus`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Residue {
    value: u64,
    modulus: u64,
}

impl Residue {
    pub fn value(self) -> u64 {
        self.value
    }

    pub fn modulus(self) -> u64 {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

fn check_modulus(m: u64) -> Result<(), RccError> {
    if m <= 1 {
        return Err(RccError::Modulus {
            modulus: m,
            reason: "modulus must be greater than 1".into(),
        });
    }
    Ok(())
}

pub fn to_residue(a: i64, m: u64) -> Result<Residue, RccError> {
    check_modulus(m)?;
    Ok(Residue {
        value: (a as i128).rem_euclid(m as i128) as u64,
        modulus: m,
    })
}

/// Residue of an already-reduced value; `value` must be below `m`.
pub(crate) fn residue_unchecked(value: u64, m: u64) -> Residue {
    debug_assert!(value < m);
    Residue { value, modulus: m }
}

fn same_modulus(a: Residue, b: Residue) -> Result<u64, RccError> {
    if a.modulus != b.modulus {
        return Err(RccError::Modulus {
            modulus: b.modulus,
            reason: format!("operands live in different rings (mod {} and mod {})", a.modulus, b.modulus),
        });
    }
    Ok(a.modulus)
}

pub fn ring_add(a: Residue, b: Residue) -> Result<Residue, RccError> {
    let m = same_modulus(a, b)?;
    // Both values are below m, so the sum fits in u64 whenever m does not use the top bit.
    let v = if m <= 1 << 63 {
        (a.value + b.value) % m
    } else {
        ((a.value as u128 + b.value as u128) % m as u128) as u64
    };
    Ok(residue_unchecked(v, m))
}

pub fn ring_neg(a: Residue) -> Residue {
    residue_unchecked((a.modulus - a.value) % a.modulus, a.modulus)
}

/// `a - b` as `a + (-b)`.
pub fn ring_sub(a: Residue, b: Residue) -> Result<Residue, RccError> {
    ring_add(a, ring_neg(b))
}

pub fn ring_mul(a: Residue, b: Residue) -> Result<Residue, RccError> {
    let m = same_modulus(a, b)?;
    let v = if m <= u32::MAX as u64 {
        a.value * b.value % m
    } else {
        ((a.value as u128 * b.value as u128) % m as u128) as u64
    };
    Ok(residue_unchecked(v, m))
}

pub fn is_prime(m: u64) -> bool {
    if m < 2 {
        return false;
    }
    if m % 2 == 0 {
        return m == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= m {
        if m % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Inverse by the extended Euclidean algorithm, without the primality check.
pub(crate) fn inverse_unchecked(a: Residue) -> Option<Residue> {
    let m = a.modulus as i128;
    let (mut r0, mut r1) = (m, a.value as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0 == 1).then(|| residue_unchecked(t0.rem_euclid(m) as u64, a.modulus))
}

pub fn ring_inv(a: Residue) -> Result<Residue, RccError> {
    if !is_prime(a.modulus) {
        return Err(RccError::Modulus {
            modulus: a.modulus,
            reason: "inverses require a prime modulus".into(),
        });
    }
    inverse_unchecked(a).ok_or(RccError::NoInverse { modulus: a.modulus })
}

/// `a / b` as `a * b^-1`.
pub fn ring_div(a: Residue, b: Residue) -> Result<Residue, RccError> {
    same_modulus(a, b)?;
    ring_mul(a, ring_inv(b)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, m: u64) -> Residue {
        to_residue(a, m).unwrap()
    }

    #[test]
    fn canonical_residues() {
        assert_eq!(r(14, 7).value(), 0);
        assert_eq!(r(-7, 5).value(), 3);
        assert_eq!(r(i16::MIN as i64, 3).value(), 1);
        assert!(matches!(to_residue(5, 1), Err(RccError::Modulus { .. })));
        assert!(matches!(to_residue(5, 0), Err(RccError::Modulus { .. })));
    }

    #[test]
    fn ring_examples() {
        assert_eq!(ring_mul(r(3, 5), r(4, 5)).unwrap(), r(2, 5));
        assert_eq!(ring_sub(r(2, 7), r(4, 7)).unwrap(), r(5, 7));
        assert_eq!(ring_add(r(6, 11), r(0, 11)).unwrap(), r(6, 11));
        assert_eq!(ring_inv(r(3, 7)).unwrap(), r(5, 7));
        assert_eq!(ring_inv(r(4, 5)).unwrap(), r(4, 5));
        assert_eq!(ring_inv(r(1, 101)).unwrap(), r(1, 101));
        assert_eq!(ring_div(r(6, 5), r(3, 5)).unwrap(), r(2, 5));
        assert_eq!(ring_div(r(1, 7), r(2, 7)).unwrap(), r(4, 7));
        assert_eq!(ring_div(r(1, 3), r(3, 3)), Err(RccError::NoInverse { modulus: 3 }));
        assert!(matches!(ring_inv(r(3, 8)), Err(RccError::Modulus { .. })));
        assert!(matches!(ring_add(r(1, 3), r(1, 5)), Err(RccError::Modulus { .. })));
    }

    #[test]
    fn primality() {
        let primes: Vec<u64> = (0..50).filter(|&n| is_prime(n)).collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]);
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(1_000_000_007 * 3));
    }
}

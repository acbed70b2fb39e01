use dhac_core::rcc::{is_prime, ring_add, ring_div, ring_inv, ring_mul, ring_neg, ring_sub, to_residue, Residue};
use proptest::prelude::*;

fn prime_below(bound: u64) -> impl Strategy<Value = u64> {
    (2..bound).prop_filter("prime", |&m| is_prime(m))
}

fn r(a: i64, m: u64) -> Residue {
    to_residue(a, m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn addition_and_multiplication_commute(m in prime_below(10_000), a in any::<i64>(), b in any::<i64>()) {
        let (x, y) = (r(a, m), r(b, m));
        prop_assert_eq!(ring_add(x, y).unwrap(), ring_add(y, x).unwrap());
        prop_assert_eq!(ring_mul(x, y).unwrap(), ring_mul(y, x).unwrap());
    }

    #[test]
    fn associativity_and_distributivity(m in 2u64..10_000, a in any::<i64>(), b in any::<i64>(), c in any::<i64>()) {
        let (x, y, z) = (r(a, m), r(b, m), r(c, m));
        let add = |p, q| ring_add(p, q).unwrap();
        let mul = |p, q| ring_mul(p, q).unwrap();
        prop_assert_eq!(add(add(x, y), z), add(x, add(y, z)));
        prop_assert_eq!(mul(mul(x, y), z), mul(x, mul(y, z)));
        prop_assert_eq!(mul(x, add(y, z)), add(mul(x, y), mul(x, z)));
    }

    #[test]
    fn residues_are_homomorphic(m in 2u64..10_000, a in -1_000_000i64..1_000_000, b in -1_000_000i64..1_000_000) {
        prop_assert_eq!(ring_add(r(a, m), r(b, m)).unwrap(), r(a + b, m));
        prop_assert_eq!(ring_sub(r(a, m), r(b, m)).unwrap(), r(a - b, m));
        prop_assert_eq!(ring_mul(r(a, m), r(b, m)).unwrap(), r(a * b, m));
        prop_assert_eq!(ring_neg(r(a, m)), r(-a, m));
    }

    #[test]
    fn nonzero_elements_are_invertible(m in prime_below(10_000), a in any::<i64>()) {
        let x = r(a, m);
        prop_assume!(!x.is_zero());
        let inv = ring_inv(x).unwrap();
        prop_assert_eq!(ring_mul(x, inv).unwrap(), r(1, m));
        // Brute-force uniqueness on small rings.
        if m < 200 {
            let hits = (0..m as i64).filter(|&b| ring_mul(x, r(b, m)).unwrap() == r(1, m)).count();
            prop_assert_eq!(hits, 1);
        }
    }

    #[test]
    fn division_agrees_with_exact_division(m in prime_below(10_000), q in -30_000i64..30_000, d in -30_000i64..30_000) {
        prop_assume!(d != 0);
        let dividend = q * d;
        let dr = r(d, m);
        prop_assume!(!dr.is_zero());
        prop_assert_eq!(ring_div(r(dividend, m), dr).unwrap(), r(q, m));
    }
}

/// The full-scale sweep: 10^5 random residues over primes below 10^4.
#[test]
fn ring_axioms_hold_on_a_large_sample() {
    use rand::Rng;
    let mut rng = dhac_core::rng::substream(2024, "ring-laws", 0);
    let primes: Vec<u64> = (2..10_000).filter(|&m| is_prime(m)).collect();
    let mut violations = 0usize;
    for _ in 0..100_000 {
        let m = primes[rng.gen_range(0..primes.len())];
        let (x, y, z) = (r(rng.gen(), m), r(rng.gen(), m), r(rng.gen(), m));
        let add = |p, q| ring_add(p, q).unwrap();
        let mul = |p, q| ring_mul(p, q).unwrap();
        let ok = add(x, y) == add(y, x)
            && mul(x, y) == mul(y, x)
            && add(add(x, y), z) == add(x, add(y, z))
            && mul(mul(x, y), z) == mul(x, mul(y, z))
            && mul(x, add(y, z)) == add(mul(x, y), mul(x, z))
            && (x.is_zero() || mul(x, ring_inv(x).unwrap()) == r(1, m))
            && (y.is_zero() || mul(ring_div(x, y).unwrap(), y) == x);
        violations += usize::from(!ok);
    }
    assert_eq!(violations, 0);
}

//! Logarithms and roots of big integers.
//!
//! The closed-form dimension formulas only ever need natural logs of grid
//! sides and covering counts, so arbitrary-precision inputs are collapsed
//! to `f64` here, at the last possible moment. Conversion goes through the
//! top 53 bits plus an exact power-of-two offset, which keeps the absolute
//! error of `ln_big` below a few units in the last place regardless of how
//! large the input is (no detour through `f64` overflow).
//!
//! Roots stay exact: `floor_nth_root` and `ceil_nth_root` return the
//! integer bracketing the real root, verified by multiplication rather
//! than trusted from floating point.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// Natural logarithm of a positive big integer.
///
/// Exact-mantissa path for values below 2^53; otherwise the top 53 bits
/// carry the mantissa and the remaining bit length contributes an exact
/// multiple of ln 2. Panics on zero.
pub fn ln_big(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "ln_big: argument must be positive");
    let bits = x.bits();
    if bits <= 53 {
        let v = x.to_f64().expect("values below 2^53 convert exactly");
        v.ln()
    } else {
        let shift = bits - 53;
        let top = (x >> shift).to_f64().expect("top 53 bits fit in f64");
        top.ln() + (shift as f64) * std::f64::consts::LN_2
    }
}

/// Natural logarithm of the ratio `num / den` of positive big integers.
pub fn ln_ratio(num: &BigUint, den: &BigUint) -> f64 {
    ln_big(num) - ln_big(den)
}

/// Largest integer `r` with `r^n <= x`.
///
/// Starts from the library root and then re-verifies by exact
/// multiplication, so the result is correct even if the seed were off by
/// one in either direction.
pub fn floor_nth_root(x: &BigUint, n: u32) -> BigUint {
    assert!(n >= 1, "floor_nth_root: root order must be at least 1");
    if x.is_zero() {
        return BigUint::zero();
    }
    if n == 1 {
        return x.clone();
    }
    let mut r = x.nth_root(n);
    while r.pow(n) > *x {
        r -= 1u32;
    }
    while (&r + 1u32).pow(n) <= *x {
        r += 1u32;
    }
    r
}

/// Smallest integer `r` with `r^n >= x`.
pub fn ceil_nth_root(x: &BigUint, n: u32) -> BigUint {
    let r = floor_nth_root(x, n);
    if r.pow(n) == *x {
        r
    } else {
        r + BigUint::one()
    }
}

/// Exact `n`-th root if `x` is a perfect `n`-th power, `None` otherwise.
pub fn exact_nth_root(x: &BigUint, n: u32) -> Option<BigUint> {
    let r = floor_nth_root(x, n);
    if r.pow(n) == *x {
        Some(r)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn big(v: u64) -> BigUint {
        BigUint::from_u64(v).unwrap()
    }

    #[test]
    fn ln_matches_f64_for_small_values() {
        for v in [1u64, 2, 3, 7, 360, 1 << 52] {
            let got = ln_big(&big(v));
            let want = (v as f64).ln();
            assert!(
                (got - want).abs() <= f64::EPSILON * want.abs().max(1.0),
                "ln({v}): got {got}, want {want}"
            );
        }
    }

    #[test]
    fn ln_of_large_power_of_two_is_exact_multiple_of_ln2() {
        let x = BigUint::one() << 2000;
        let got = ln_big(&x);
        let want = 2000.0 * std::f64::consts::LN_2;
        assert!((got - want).abs() < 1e-10, "got {got}, want {want}");
    }

    #[test]
    fn ln_of_large_power_of_ten() {
        let x = big(10).pow(150);
        let got = ln_big(&x);
        let want = 150.0 * 10f64.ln();
        assert!(
            (got - want).abs() / want < 1e-14,
            "got {got}, want {want}"
        );
    }

    #[test]
    fn roots_bracket_the_real_root() {
        for n in 2u32..=5 {
            for v in 0u64..=2000 {
                let x = big(v);
                let lo = floor_nth_root(&x, n);
                let hi = ceil_nth_root(&x, n);
                assert!(lo.pow(n) <= x, "floor violated at v={v}, n={n}");
                assert!((&lo + 1u32).pow(n) > x, "floor not maximal at v={v}, n={n}");
                assert!(hi.pow(n) >= x, "ceil violated at v={v}, n={n}");
                if !x.is_zero() {
                    assert!(
                        hi.pow(n) < &x * big(1 << n) || hi.pow(n) == x || (&hi - 1u32).pow(n) < x,
                        "ceil not minimal at v={v}, n={n}"
                    );
                }
            }
        }
    }

    #[test]
    fn roots_of_huge_perfect_powers() {
        let base = big(12_345_678_901);
        for n in [2u32, 3, 7] {
            let x = base.pow(n);
            assert_eq!(floor_nth_root(&x, n), base);
            assert_eq!(ceil_nth_root(&x, n), base);
            assert_eq!(exact_nth_root(&x, n), Some(base.clone()));
            let above = &x + 1u32;
            assert_eq!(floor_nth_root(&above, n), base);
            assert_eq!(ceil_nth_root(&above, n), &base + 1u32);
            assert_eq!(exact_nth_root(&above, n), None);
        }
    }
}

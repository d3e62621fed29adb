//! Exact rational scalars and their JSON encoding.
//!
//! All coefficients, norms squared and inequality checks use
//! [`num::BigRational`].  On the wire a rational is always a `{"num", "den"}`
//! pair of JSON integers; `serde_json`'s `arbitrary_precision` feature keeps
//! values exact at any size.

use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = num::BigRational;

/// `n/d` as an exact rational.  Panics on `d == 0`.
pub fn q(n: i64, d: i64) -> Rational {
    Ratio::new(BigInt::from(n), BigInt::from(d))
}

/// Integer `n` as a rational.
pub fn qi(n: i64) -> Rational {
    Ratio::from_integer(BigInt::from(n))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"3"`, `"-3"` or `"3/4"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let mk_err = || Error::input(format!("cannot parse rational from {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| mk_err())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| mk_err())?;
            if d.is_zero() {
                return Err(Error::input(format!("zero denominator in {s:?}")));
            }
            Ok(Ratio::new(n, d))
        }
        None => {
            let n = BigInt::from_str(s).map_err(|_| mk_err())?;
            Ok(Ratio::from_integer(n))
        }
    }
}

/// Exact dyadic rational closest to `x` with denominator `2^bits`.
pub fn dyadic_from_f64(x: f64, bits: u32) -> Rational {
    let scaled = (x * (bits as f64).exp2()).round();
    match Rational::from_float(scaled) {
        Some(n) => n / Rational::from_integer(BigInt::one() << bits),
        None => Rational::zero(),
    }
}

/// A rational `r ≥ √v` with `r² − v` below `v / 2^precision`-ish.
/// Requires `v ≥ 0`.
pub fn sqrt_upper(v: &Rational, extra_newton_steps: u32) -> Rational {
    assert!(!v.is_negative(), "sqrt of negative rational");
    if v.is_zero() {
        return Rational::zero();
    }
    // Seed from f64 and refine; Newton on x ↦ (x + v/x)/2 from any x ≥ √v
    // stays an upper bound and converges quadratically.
    let seed = to_f64(v).sqrt();
    let mut r = if seed.is_finite() && seed > 0.0 {
        dyadic_from_f64(seed * (1.0 + 1e-9) + f64::MIN_POSITIVE, 60)
    } else {
        v.clone() + Rational::one()
    };
    if &r * &r < *v {
        // climb until it is an upper bound
        while &r * &r < *v {
            r *= qi(2);
        }
    }
    for _ in 0..extra_newton_steps {
        r = (&r + v / &r) / qi(2);
    }
    debug_assert!(&r * &r >= *v);
    r
}

/// A rational `r` with `0 ≤ r ≤ √v`.  Requires `v ≥ 0`.
pub fn sqrt_lower(v: &Rational, extra_newton_steps: u32) -> Rational {
    if v.is_zero() {
        return Rational::zero();
    }
    let ub = sqrt_upper(v, extra_newton_steps);
    // v/ub ≤ √v whenever ub ≥ √v.
    v / ub
}

/// Wire form of a rational: a pair of arbitrary-size JSON integers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RationalJson {
    pub num: serde_json::Number,
    pub den: serde_json::Number,
}

pub fn rational_to_json(r: &Rational) -> RationalJson {
    RationalJson {
        num: bigint_to_number(r.numer()),
        den: bigint_to_number(r.denom()),
    }
}

pub fn rational_from_json(j: &RationalJson) -> Result<Rational> {
    let num = number_to_bigint(&j.num)?;
    let den = number_to_bigint(&j.den)?;
    if den.is_zero() {
        return Err(Error::input("rational with zero denominator"));
    }
    Ok(Ratio::new(num, den))
}

fn bigint_to_number(i: &BigInt) -> serde_json::Number {
    serde_json::Number::from_str(&i.to_string()).expect("integer literal is a JSON number")
}

fn number_to_bigint(n: &serde_json::Number) -> Result<BigInt> {
    BigInt::from_str(&n.to_string())
        .map_err(|_| Error::input(format!("expected an integer, got {n}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3").unwrap(), qi(3));
        assert_eq!(parse_rational("-3/4").unwrap(), q(-3, 4));
        assert_eq!(parse_rational(" 1/8 ").unwrap(), q(1, 8));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("0.5").is_err());
    }

    #[test]
    fn sqrt_bounds_bracket() {
        for v in [q(2, 1), q(5, 7), qi(144), q(1, 3)] {
            let ub = sqrt_upper(&v, 4);
            let lb = sqrt_lower(&v, 4);
            assert!(&ub * &ub >= v);
            assert!(&lb * &lb <= v);
            assert!(to_f64(&(ub - lb)) < 1e-9);
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let big = parse_rational("123456789012345678901234567890/7").unwrap();
        let j = rational_to_json(&big);
        let s = serde_json::to_string(&j).unwrap();
        let back: RationalJson = serde_json::from_str(&s).unwrap();
        assert_eq!(rational_from_json(&back).unwrap(), big);
    }
}

//! Small helpers around [`BigRational`].

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalParseError {
    #[error("`{0}` is not a rational of the form p/q or an integer")]
    Syntax(String),
    #[error("`{0}` has a zero denominator")]
    ZeroDenominator(String),
    #[error("`{0}` is not written in lowest terms")]
    NotReduced(String),
}

/// Parses `"p/q"` or `"p"`. The fraction must already be reduced.
pub fn parse_ratio(text: &str) -> Result<BigRational, RationalParseError> {
    let t = text.trim();
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| RationalParseError::Syntax(t.to_string()))?;
    let den: BigInt = den.parse().map_err(|_| RationalParseError::Syntax(t.to_string()))?;
    if den.is_zero() {
        return Err(RationalParseError::ZeroDenominator(t.to_string()));
    }
    let raw = BigRational::new_raw(num.clone(), den.clone());
    let reduced = raw.reduced();
    if reduced.numer() != &num || reduced.denom() != &den {
        return Err(RationalParseError::NotReduced(t.to_string()));
    }
    Ok(reduced)
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(value: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(value))
}

pub fn pow(base: &BigRational, exp: u64) -> BigRational {
    if exp == 0 {
        return BigRational::one();
    }
    Pow::pow(base, BigUint::from(exp))
}

/// 2^-n as an exact rational.
pub fn two_pow_neg(n: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << n as usize)
}

fn log2_uint(value: &BigUint) -> f64 {
    let bits = value.bits();
    if bits <= 960 {
        value.to_f64().map(f64::log2).unwrap_or(f64::NAN)
    } else {
        let shift = bits - 64;
        let top = (value >> shift as usize).to_f64().unwrap_or(f64::NAN);
        top.log2() + shift as f64
    }
}

/// log2 of a positive rational, robust to numerators far beyond `f64` range.
/// Returns `-inf` for zero and `NaN` for negative input.
pub fn log2(value: &BigRational) -> f64 {
    if value.is_zero() {
        return f64::NEG_INFINITY;
    }
    if value.is_negative() {
        return f64::NAN;
    }
    let num = value.numer().magnitude();
    let den = value.denom().magnitude();
    log2_uint(num) - log2_uint(den)
}

pub fn to_f64(value: &BigRational) -> f64 {
    let l = log2(value);
    if l.is_finite() {
        l.exp2()
    } else if value.is_zero() {
        0.0
    } else {
        f64::NAN
    }
}

/// Displays a rational as `num/den` (always with a denominator).
pub struct NumDen<'a>(pub &'a BigRational);

impl fmt::Display for NumDen<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_reduced_fractions() {
        assert_eq!(parse_ratio("3/2").unwrap(), ratio(3, 2));
        assert_eq!(parse_ratio(" 5 ").unwrap(), int(5));
        assert_eq!(parse_ratio("0").unwrap(), BigRational::zero());
        assert!(matches!(parse_ratio("6/4"), Err(RationalParseError::NotReduced(_))));
        assert!(matches!(parse_ratio("1/0"), Err(RationalParseError::ZeroDenominator(_))));
        assert!(matches!(parse_ratio("a/b"), Err(RationalParseError::Syntax(_))));
    }

    #[test]
    fn log2_of_huge_values() {
        let big = pow(&ratio(3, 2), 5000);
        let expected = 5000.0 * 1.5f64.log2();
        assert!((log2(&big) - expected).abs() < 1e-6);
        assert_eq!(log2(&ratio(1, 8)), -3.0);
        assert_eq!(log2(&BigRational::zero()), f64::NEG_INFINITY);
    }

    #[test]
    fn num_den_display() {
        assert_eq!(NumDen(&int(4)).to_string(), "4/1");
        assert_eq!(NumDen(&ratio(9, 16)).to_string(), "9/16");
    }
}

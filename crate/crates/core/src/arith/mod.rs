//! Exact integer and rational arithmetic, prime sieving, factorization, and
//! certified interval evaluation of transcendental quantities.
//!
//! Every weight, multiplicative-function value and measure in the crate is an
//! exact [`Ratio`]. Only factors such as `e^C` or `(Log t)^x` leave the
//! rationals, and those are handled by [`interval`] with outward rounding.

pub mod interval;
pub mod sieve;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub use interval::{interval_eval, interval_eval_ln, Interval, RealExpr, Verdict};
pub use sieve::{factorize, is_prime, primes_upto, sieve_cap, valuation, valuation_u64};

/// Exact rational number in lowest terms with a positive denominator.
pub type Ratio = num_rational::BigRational;

pub fn ratio(numer: i64, denom: i64) -> Ratio {
    Ratio::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(n: u64) -> Ratio {
    Ratio::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, `"-p/q"` or a bare integer. Decimal points are rejected so
/// that every serialized value stays exact.
pub fn parse_ratio(s: &str) -> Result<Ratio> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("not a rational: {s:?}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Ratio::new(parse_int(n)?, d))
        }
        None => Ok(Ratio::from_integer(parse_int(s)?)),
    }
}

/// Inverse of [`parse_ratio`]: `"p/q"`, or `"p"` for integers.
pub fn format_ratio(x: &Ratio) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn floor_i64(x: &Ratio) -> Option<i64> {
    x.floor().to_integer().to_i64()
}

pub fn ceil_i64(x: &Ratio) -> Option<i64> {
    x.ceil().to_integer().to_i64()
}

/// `floor(x)` as a natural number, saturating at `u64::MAX`. `x` must be nonnegative.
pub fn floor_u64(x: &Ratio) -> u64 {
    let f = x.floor().to_integer();
    if f.is_negative() {
        0
    } else {
        f.to_u64().unwrap_or(u64::MAX)
    }
}

pub fn pow_i(base: &Ratio, exp: i64) -> Ratio {
    if exp >= 0 {
        num_traits::pow(base.clone(), exp as usize)
    } else {
        num_traits::pow(base.recip(), (-exp) as usize)
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Least common multiple of the denominators of `values`.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Ratio>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Integer `k` with `|x| < 2^k`, up to one unit of slack. Zero maps to 0.
pub(crate) fn log2_hint(x: &Ratio) -> i64 {
    if x.is_zero() {
        return 0;
    }
    x.numer().bits() as i64 - x.denom().bits() as i64 + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["0", "3", "-7/2", "17/36", "1/1000000000000000000000"] {
            assert_eq!(format_ratio(&parse_ratio(s).unwrap()), s);
        }
        assert_eq!(format_ratio(&parse_ratio("4/6").unwrap()), "2/3");
        assert!(parse_ratio("0.5").is_err());
        assert!(parse_ratio("1/0").is_err());
    }

    #[test]
    fn floor_and_ceil() {
        assert_eq!(floor_i64(&ratio(-1, 2)), Some(-1));
        assert_eq!(ceil_i64(&ratio(-1, 2)), Some(0));
        assert_eq!(floor_u64(&ratio(21, 2)), 10);
        assert_eq!(floor_u64(&ratio(-3, 2)), 0);
    }

    #[test]
    fn log2_hint_brackets() {
        for (n, d) in [(1, 1), (3, 1), (1, 3), (1024, 1), (7, 1024), (5, 4)] {
            let x = ratio(n, d);
            let k = log2_hint(&x);
            assert!(x < pow_i(&int(2), k), "{n}/{d} vs 2^{k}");
            assert!(x >= pow_i(&int(2), k - 2), "{n}/{d} vs 2^{}", k - 2);
        }
    }
}

//! Exact probabilities in `[0, 1]` and 64-bit fixed-point fractions for coin flips.
//!
//! Every announced, estimated or threshold probability is a [`UnitRational`];
//! comparisons between them are exact. Coin-flip shares are [`UnitFixed`]
//! values `n / 2^64` whose addition wraps modulo one.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact rational number `p` with `0 <= p <= 1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnitRational(BigRational);

impl UnitRational {
    pub fn new(numer: u64, denom: u64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidParams("zero denominator".into()));
        }
        if numer > denom {
            return Err(Error::InvalidParams(format!(
                "{numer}/{denom} lies outside [0, 1]"
            )));
        }
        Ok(Self(BigRational::new(numer.into(), denom.into())))
    }

    /// Panics when the value lies outside `[0, 1]`; for literals in code and tests.
    pub fn ratio(numer: u64, denom: u64) -> Self {
        Self::new(numer, denom).expect("literal probability out of range")
    }

    pub fn from_big(value: BigRational) -> Result<Self> {
        if value.is_negative() || value > BigRational::one() {
            return Err(Error::InvalidParams(format!("{value} lies outside [0, 1]")));
        }
        Ok(Self(value))
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Self::one()
        } else {
            Self::zero()
        }
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// `Some(bit)` when the value is exactly 0 or 1.
    pub fn as_bit(&self) -> Option<bool> {
        if self.is_zero() {
            Some(false)
        } else if self.is_one() {
            Some(true)
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// `1 - p`.
    pub fn complement(&self) -> Self {
        Self(BigRational::one() - &self.0)
    }

    pub fn abs_diff(&self, other: &Self) -> Self {
        Self((&self.0 - &other.0).abs())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    /// `min(p + delta, 1)`.
    pub fn add_clamped(&self, delta: &BigRational) -> Self {
        let v = &self.0 + delta;
        Self(clamp_unit(v))
    }

    /// Mean `successes / trials`.
    pub fn mean(successes: u64, trials: u64) -> Result<Self> {
        Self::new(successes, trials)
    }

    /// Whether the fixed-point value `z` satisfies `z <= p`.
    pub fn admits(&self, z: UnitFixed) -> bool {
        // z / 2^64 <= n / d  <=>  z * d <= n * 2^64
        let lhs = BigInt::from(z.0) * self.denom();
        let rhs = self.numer() << 64;
        lhs <= rhs
    }

    /// Number of raw `u64` values `u` with `u / 2^64 < p`, i.e. `ceil(p * 2^64)`.
    pub fn fixed_threshold(&self) -> u128 {
        let scaled: BigInt = self.numer() << 64;
        let (q, r) = scaled.div_rem(self.denom());
        let q = q.to_u128().expect("p <= 1 keeps the threshold within 2^64");
        if r.is_zero() {
            q
        } else {
            q + 1
        }
    }

    /// Smallest integer `>= p * factor`.
    pub fn ceil_times(&self, factor: u64) -> u64 {
        let v = &self.0 * BigRational::from_integer(factor.into());
        v.ceil().to_integer().to_u64().unwrap_or(u64::MAX)
    }
}

fn clamp_unit(v: BigRational) -> BigRational {
    if v.is_negative() {
        BigRational::zero()
    } else if v > BigRational::one() {
        BigRational::one()
    } else {
        v
    }
}

/// Parses `a/b`, an integer, or a finite decimal such as `0.125` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidParams(format!("cannot parse `{s}` as a rational"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    let v = BigRational::new(numer, denom);
    Ok(if neg { -v } else { v })
}

impl FromStr for UnitRational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_big(parse_rational(s)?)
    }
}

impl fmt::Display for UnitRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for UnitRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for UnitRational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for UnitRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A fraction `n / 2^64` in `[0, 1)`. Addition wraps modulo one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct UnitFixed(pub u64);

impl UnitFixed {
    pub const ZERO: UnitFixed = UnitFixed(0);

    pub fn raw(self) -> u64 {
        self.0
    }

    pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self(rng.random())
    }

    /// The representable value nearest to `value mod 1` (wrapping to 0 at the top).
    pub fn from_rational(value: &BigRational) -> Self {
        let frac = value - value.floor();
        let scaled = (frac * BigRational::from_integer(BigInt::one() << 64)).round();
        let n: BigUint = scaled.to_integer().to_biguint().unwrap_or_default();
        Self((n & BigUint::from(u64::MAX)).to_u64().unwrap_or(0))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 18_446_744_073_709_551_616.0
    }

    /// Exact value as a rational.
    pub fn to_rational(self) -> BigRational {
        BigRational::new(BigInt::from(self.0), BigInt::one() << 64)
    }
}

/// `a + b mod 1`.
pub fn mod1_add(a: UnitFixed, b: UnitFixed) -> UnitFixed {
    UnitFixed(a.0.wrapping_add(b.0))
}

impl fmt::Display for UnitFixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:016x}", self.0)
    }
}

/// Exact comparison of `|a - b|` against `threshold`.
pub fn distance_cmp(a: &UnitRational, b: &UnitRational, threshold: &BigRational) -> Ordering {
    (a.as_big() - b.as_big()).abs().cmp(threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fixed(num: u64, den: u64) -> UnitFixed {
        UnitFixed::from_rational(&BigRational::new(num.into(), den.into()))
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(UnitRational::new(3, 2).is_err());
        assert!(UnitRational::new(1, 0).is_err());
        assert!("-1/2".parse::<UnitRational>().is_err());
    }

    #[test]
    fn parses_decimals_exactly() {
        let p: UnitRational = "0.9".parse().unwrap();
        assert_eq!(p, UnitRational::ratio(9, 10));
        let q: UnitRational = "3/12".parse().unwrap();
        assert_eq!(q.to_string(), "1/4");
        assert_eq!("1".parse::<UnitRational>().unwrap(), UnitRational::one());
    }

    #[test]
    fn mod1_add_examples() {
        assert_eq!(mod1_add(fixed(3, 4), fixed(1, 2)), fixed(1, 4));
        let x = UnitFixed(0x1234_5678_9abc_def0);
        assert_eq!(mod1_add(UnitFixed::ZERO, x), x);
        assert_eq!(mod1_add(fixed(9, 10), fixed(1, 10)), UnitFixed::ZERO);
        assert_eq!(mod1_add(fixed(3, 4), fixed(1, 4)), UnitFixed::ZERO);
    }

    #[test]
    fn admits_uses_non_strict_order() {
        let half = UnitRational::ratio(1, 2);
        assert!(half.admits(UnitFixed(1 << 63)));
        assert!(!half.admits(UnitFixed((1 << 63) + 1)));
        assert!(UnitRational::zero().admits(UnitFixed::ZERO));
        assert!(UnitRational::one().admits(UnitFixed(u64::MAX)));
    }

    #[test]
    fn fixed_threshold_counts_values_below_p() {
        assert_eq!(UnitRational::zero().fixed_threshold(), 0);
        assert_eq!(UnitRational::one().fixed_threshold(), 1u128 << 64);
        assert_eq!(UnitRational::ratio(1, 2).fixed_threshold(), 1u128 << 63);
        // 1/3 * 2^64 is not an integer, so the ceiling is taken.
        let t = UnitRational::ratio(1, 3).fixed_threshold();
        assert_eq!(t, (1u128 << 64) / 3 + 1);
    }

    #[test]
    fn ceil_times() {
        assert_eq!(UnitRational::one().ceil_times(150), 150);
        assert_eq!(UnitRational::ratio(1, 3).ceil_times(150), 50);
        assert_eq!(UnitRational::ratio(1, 7).ceil_times(150), 22);
    }

    proptest! {
        #[test]
        fn mod1_add_is_commutative_and_invertible(a: u64, b: u64) {
            let (x, y) = (UnitFixed(a), UnitFixed(b));
            prop_assert_eq!(mod1_add(x, y), mod1_add(y, x));
            prop_assert_eq!(mod1_add(mod1_add(x, y), UnitFixed(b.wrapping_neg())), x);
        }

        #[test]
        fn admits_matches_threshold(num in 0u64..1000, extra in 0u64..1000, raw: u64) {
            let den = num + extra + 1;
            let p = UnitRational::new(num, den).unwrap();
            let z = UnitFixed(raw);
            prop_assert_eq!(p.admits(z), (raw as u128) < p.fixed_threshold() || {
                // equality case: z == p exactly
                BigRational::from_integer(raw.into()) == p.as_big() * BigRational::from_integer(BigInt::one() << 64)
            });
        }
    }
}

//! Exact dyadic rationals.
//!
//! [`DyadicRational`] is the general value type `numerator / 2^exponent` backed
//! by an arbitrary-precision numerator. [`DyadicPoint`] is the representation
//! used for orbit points of Thompson's group F: a dyadic in the open unit
//! interval stored as the little-endian bits of its odd numerator, so the bit
//! vector has exactly `exponent` entries and its last entry is the first
//! binary digit after the point. The standard generators of F rewrite a prefix
//! of at most three binary digits, which on this layout is a constant-time
//! edit at the end of the vector regardless of how deep the point is.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// An exact number `numerator / 2^exponent`.
///
/// Canonical form: either `exponent == 0` or the numerator is odd; zero is
/// stored as `0 / 2^0`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct DyadicRational {
    numerator: BigInt,
    exponent: u64,
}

impl DyadicRational {
    pub fn new(numerator: impl Into<BigInt>, exponent: u64) -> Self {
        let mut numerator = numerator.into();
        let mut exponent = exponent;
        if numerator.is_zero() {
            return Self::zero();
        }
        let tz = numerator.trailing_zeros().unwrap_or(0).min(exponent);
        if tz > 0 {
            numerator >>= tz;
            exponent -= tz;
        }
        Self { numerator, exponent }
    }

    pub fn zero() -> Self {
        Self {
            numerator: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Self {
            numerator: BigInt::one(),
            exponent: 0,
        }
    }

    /// `numerator / 2^exponent` for small literals.
    pub fn from_parts(numerator: i64, exponent: u64) -> Self {
        Self::new(BigInt::from(numerator), exponent)
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// True for values strictly between 0 and 1.
    pub fn is_in_open_unit(&self) -> bool {
        self.numerator.is_positive() && *self < Self::one()
    }

    /// Multiplies by `2^shift` (shift may be negative).
    pub fn mul_pow2(&self, shift: i64) -> Self {
        if shift >= 0 {
            let s = shift as u64;
            if s <= self.exponent {
                Self::new(self.numerator.clone(), self.exponent - s)
            } else {
                Self::new(&self.numerator << (s - self.exponent), 0)
            }
        } else {
            Self::new(self.numerator.clone(), self.exponent + shift.unsigned_abs())
        }
    }

    pub fn to_f64(&self) -> f64 {
        // Fine for display and statistics; exact comparisons never go through here.
        let bits = self.numerator.bits();
        if bits <= 1000 && self.exponent <= 1000 {
            self.numerator.to_f64().unwrap_or(f64::NAN) / 2f64.powi(self.exponent as i32)
        } else {
            let drop = bits.saturating_sub(64);
            let top = (&self.numerator >> drop).to_f64().unwrap_or(f64::NAN);
            let e = drop as f64 - self.exponent as f64;
            top * e.exp2()
        }
    }

    fn aligned(&self, other: &Self) -> (BigInt, BigInt, u64) {
        let e = self.exponent.max(other.exponent);
        (
            &self.numerator << (e - self.exponent),
            &other.numerator << (e - other.exponent),
            e,
        )
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &DyadicRational {
    type Output = DyadicRational;
    fn add(self, rhs: &DyadicRational) -> DyadicRational {
        let (a, b, e) = self.aligned(rhs);
        DyadicRational::new(a + b, e)
    }
}

impl Sub for &DyadicRational {
    type Output = DyadicRational;
    fn sub(self, rhs: &DyadicRational) -> DyadicRational {
        let (a, b, e) = self.aligned(rhs);
        DyadicRational::new(a - b, e)
    }
}

impl Neg for &DyadicRational {
    type Output = DyadicRational;
    fn neg(self) -> DyadicRational {
        DyadicRational {
            numerator: -&self.numerator,
            exponent: self.exponent,
        }
    }
}

/// Serializes as `a/2^b`, e.g. 13/16 prints as `13/2^4`.
impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numerator, self.exponent)
    }
}

/// Accepts `a/2^b`, `a/q` with `q` a power of two, or a bare integer `a`.
/// Non-canonical inputs such as `2/2^2` are reduced.
impl FromStr for DyadicRational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let s_trim = s.trim();
        let (num, den) = match s_trim.split_once('/') {
            Some((n, d)) => (n.trim(), Some(d.trim())),
            None => (s_trim, None),
        };
        let numerator = BigInt::from_str(num).map_err(|_| bad("numerator is not an integer"))?;
        let exponent = match den {
            None => 0,
            Some(d) => {
                if let Some(e) = d.strip_prefix("2^") {
                    e.parse::<u64>()
                        .map_err(|_| bad("exponent is not a non-negative integer"))?
                } else {
                    let q = BigUint::from_str(d).map_err(|_| bad("denominator is not an integer"))?;
                    if q.is_zero() || q.count_ones() != 1 {
                        return Err(bad("denominator is not a power of two"));
                    }
                    q.bits() - 1
                }
            }
        };
        Ok(Self::new(numerator, exponent))
    }
}

/// The four generator maps of F in the prefix-rewriting form used by
/// [`DyadicPoint`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ThompsonMap {
    A,
    AInv,
    B,
    BInv,
}

impl ThompsonMap {
    pub fn inverse(self) -> Self {
        match self {
            Self::A => Self::AInv,
            Self::AInv => Self::A,
            Self::B => Self::BInv,
            Self::BInv => Self::B,
        }
    }

    // (prefix, replacement) pairs, most significant digit first. Each table is
    // a complete prefix code, so exactly one rule matches any digit string.
    fn rules(self) -> &'static [(&'static [bool], &'static [bool])] {
        const F: bool = false;
        const T: bool = true;
        match self {
            Self::A => &[(&[F], &[F, F]), (&[T, F], &[F, T]), (&[T, T], &[T])],
            Self::AInv => &[(&[F, F], &[F]), (&[F, T], &[T, F]), (&[T], &[T, T])],
            Self::B => &[
                (&[F], &[F]),
                (&[T, F], &[T, F, F]),
                (&[T, T, F], &[T, F, T]),
                (&[T, T, T], &[T, T]),
            ],
            Self::BInv => &[
                (&[F], &[F]),
                (&[T, F, F], &[T, F]),
                (&[T, F, T], &[T, T, F]),
                (&[T, T], &[T, T, T]),
            ],
        }
    }

    fn rule_for(self, digit: impl Fn(usize) -> bool) -> (&'static [bool], &'static [bool]) {
        self.rules()
            .iter()
            .copied()
            .find(|(pat, _)| pat.iter().enumerate().all(|(i, &b)| digit(i) == b))
            .expect("generator rules form a complete prefix code")
    }

    /// Applies the map to an explicit digit string (most significant first),
    /// reading missing digits as zeros. Trailing zeros are not stripped.
    fn rewrite_digits(self, digits: &[bool]) -> Vec<bool> {
        let get = |i: usize| digits.get(i).copied().unwrap_or(false);
        let (pat, rep) = self.rule_for(get);
        let mut out = rep.to_vec();
        if digits.len() > pat.len() {
            out.extend_from_slice(&digits[pat.len()..]);
        }
        out
    }
}

/// A dyadic rational in (0, 1), stored as the little-endian bits of its odd
/// numerator; the length of the bit vector is the exponent.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct DyadicPoint {
    bits: Vec<bool>,
}

impl DyadicPoint {
    pub fn from_rational(value: &DyadicRational) -> Result<Self> {
        if !value.is_in_open_unit() {
            return Err(Error::OutOfUnitInterval {
                point: value.to_string(),
            });
        }
        let (_, digits) = value.numerator.to_u32_digits();
        let len = value.exponent as usize;
        let mut bits = Vec::with_capacity(len);
        for i in 0..len {
            let word = digits.get(i / 32).copied().unwrap_or(0);
            bits.push((word >> (i % 32)) & 1 == 1);
        }
        Ok(Self { bits })
    }

    /// Builds a point from its binary digits after the point, most significant
    /// first (`"1101"` is 13/16). Trailing zeros are stripped.
    pub fn from_binary_digits(digits: &str) -> Result<Self> {
        let mut msb = Vec::with_capacity(digits.len());
        for c in digits.chars() {
            match c {
                '0' => msb.push(false),
                '1' => msb.push(true),
                _ => {
                    return Err(Error::Parse {
                        input: digits.to_string(),
                        reason: "binary digits must be 0 or 1".into(),
                    })
                }
            }
        }
        Self::from_msb(msb).ok_or_else(|| Error::OutOfUnitInterval {
            point: format!("0.{digits}"),
        })
    }

    fn from_msb(mut msb: Vec<bool>) -> Option<Self> {
        while msb.last() == Some(&false) {
            msb.pop();
        }
        if msb.is_empty() {
            return None;
        }
        msb.reverse();
        Some(Self { bits: msb })
    }

    pub fn to_rational(&self) -> DyadicRational {
        let mut digits = vec![0u32; self.bits.len().div_ceil(32)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                digits[i / 32] |= 1 << (i % 32);
            }
        }
        DyadicRational {
            numerator: BigInt::from_biguint(Sign::Plus, BigUint::new(digits)),
            exponent: self.bits.len() as u64,
        }
    }

    /// The exponent `b` in `a/2^b`, i.e. the number of binary digits.
    pub fn depth(&self) -> usize {
        self.bits.len()
    }

    /// Binary digit `i` after the point (0-based, most significant first).
    pub fn digit(&self, i: usize) -> bool {
        let n = self.bits.len();
        i < n && self.bits[n - 1 - i]
    }

    /// Digits after the point, most significant first.
    pub fn binary_digits(&self) -> String {
        self.bits.iter().rev().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Applies a generator in place; returns false when the point is fixed.
    pub fn apply(&mut self, map: ThompsonMap) -> bool {
        let n = self.bits.len();
        if n > 3 {
            let (pat, rep) = map.rule_for(|i| self.bits[n - 1 - i]);
            if pat == rep {
                return false;
            }
            self.bits.truncate(n - pat.len());
            self.bits.extend(rep.iter().rev());
            true
        } else {
            let msb: Vec<bool> = (0..n).map(|i| self.digit(i)).collect();
            let out = Self::from_msb(map.rewrite_digits(&msb)).expect("generators of F fix 0 and 1 and preserve (0,1)");
            let changed = out != *self;
            *self = out;
            changed
        }
    }

    pub fn applied(&self, map: ThompsonMap) -> Self {
        let mut out = self.clone();
        out.apply(map);
        out
    }

    /// Whether `self.s == self.t`, decided from the leading digits only.
    pub fn images_equal(&self, s: ThompsonMap, t: ThompsonMap) -> bool {
        if s == t {
            return true;
        }
        if self.bits.len() <= 4 {
            return self.applied(s) == self.applied(t);
        }
        // Rules consume at most three digits, so with four leading digits and
        // a non-empty tail both images share the tail and no normalization.
        let get = |i: usize| self.digit(i);
        let (ps, rs) = s.rule_for(get);
        let (pt, rt) = t.rule_for(get);
        let len = rs.len() + 4 - ps.len();
        if len != rt.len() + 4 - pt.len() {
            return false;
        }
        let at = |pat: &[bool], rep: &[bool], i: usize| {
            if i < rep.len() {
                rep[i]
            } else {
                get(i - rep.len() + pat.len())
            }
        };
        (0..len).all(|i| at(ps, rs, i) == at(pt, rt, i))
    }

    /// Equality with a short literal given as most-significant-first digits.
    pub fn is_digits(&self, msb: &[bool]) -> bool {
        self.bits.len() == msb.len() && msb.iter().enumerate().all(|(i, &b)| self.digit(i) == b)
    }
}

impl fmt::Display for DyadicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_rational().fmt(f)
    }
}

impl FromStr for DyadicPoint {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::from_rational(&s.parse()?)
    }
}

impl TryFrom<&DyadicRational> for DyadicPoint {
    type Error = Error;
    fn try_from(value: &DyadicRational) -> Result<Self> {
        Self::from_rational(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> DyadicRational {
        s.parse().unwrap()
    }

    #[test]
    fn canonical_form_and_serialization() {
        assert_eq!(d("13/16").to_string(), "13/2^4");
        assert_eq!(d("2/2^2").to_string(), "1/2^1");
        assert_eq!(d("0/2^7").to_string(), "0/2^0");
        assert_eq!(d("3").to_string(), "3/2^0");
        assert_eq!(d("-3/8").to_string(), "-3/2^3");
        assert!("1/3".parse::<DyadicRational>().is_err());
        assert!("x/2^3".parse::<DyadicRational>().is_err());
    }

    #[test]
    fn ordering_matches_rational_order() {
        assert!(d("5/8") < d("3/4"));
        assert!(d("11/16") > d("5/8"));
        assert_eq!(d("4/8").cmp(&d("1/2")), Ordering::Equal);
        assert!(d("-1/2") < d("0"));
    }

    #[test]
    fn arithmetic() {
        assert_eq!(&d("3/4") - &d("1/4"), d("1/2"));
        assert_eq!(&d("1/8") + &d("1/8"), d("1/4"));
        assert_eq!(d("3/4").mul_pow2(1), d("3/2"));
        assert_eq!(d("3/4").mul_pow2(-2), d("3/16"));
        assert!((d("13/16").to_f64() - 0.8125).abs() < 1e-15);
    }

    #[test]
    fn point_round_trip() {
        for s in ["1/2", "3/4", "13/16", "27/32", "1/1024", "1023/1024"] {
            let p: DyadicPoint = s.parse().unwrap();
            assert_eq!(p.to_rational(), d(s));
        }
        assert_eq!(DyadicPoint::from_binary_digits("1101").unwrap().to_string(), "13/2^4");
        assert!("1".parse::<DyadicPoint>().is_err());
        assert!("0".parse::<DyadicPoint>().is_err());
        assert!("5/4".parse::<DyadicPoint>().is_err());
    }

    #[test]
    fn prefix_rewrites_on_known_points() {
        let p = |s: &str| s.parse::<DyadicPoint>().unwrap();
        assert_eq!(p("3/4").applied(ThompsonMap::A), p("1/2"));
        assert_eq!(p("13/16").applied(ThompsonMap::B), p("11/16"));
        assert_eq!(p("1/2").applied(ThompsonMap::B), p("1/2"));
        assert_eq!(p("3/8").applied(ThompsonMap::A), p("3/16"));
        assert_eq!(p("1/4").applied(ThompsonMap::AInv), p("1/2"));
        let mut q = p("1/2");
        assert!(!q.apply(ThompsonMap::BInv));
        assert!(q.apply(ThompsonMap::A));
    }

    #[test]
    fn images_equal_detects_double_edges() {
        let p = |s: &str| s.parse::<DyadicPoint>().unwrap();
        // 7/8 -> 3/4 under both A and B
        assert!(p("7/8").images_equal(ThompsonMap::A, ThompsonMap::B));
        assert!(!p("13/16").images_equal(ThompsonMap::A, ThompsonMap::B));
        let deep = DyadicPoint::from_binary_digits("1110100101").unwrap();
        assert_eq!(
            deep.images_equal(ThompsonMap::A, ThompsonMap::B),
            deep.applied(ThompsonMap::A) == deep.applied(ThompsonMap::B)
        );
    }
}

//! Rational interval arithmetic with outward dyadic rounding.

use crate::num::{pow2, rational_to_string, Int, Rational};
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Closed rational interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, PartialEq, Eq)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

/// Largest multiple of 2^-bits that is <= q.
pub fn floor_dyadic(q: &Rational, bits: u32) -> Rational {
    let scaled = q * pow2(bits as i64);
    let fl = scaled.numer().div_floor(scaled.denom());
    Rational::new(fl, Int::from(1)) * pow2(-(bits as i64))
}

/// Smallest multiple of 2^-bits that is >= q.
pub fn ceil_dyadic(q: &Rational, bits: u32) -> Rational {
    -floor_dyadic(&-q.clone(), bits)
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    pub fn point(q: Rational) -> Self {
        Interval {
            lo: q.clone(),
            hi: q,
        }
    }

    pub fn zero() -> Self {
        Interval::point(Rational::zero())
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> Rational {
        (&self.lo + &self.hi) / crate::num::rat_int(2)
    }

    pub fn contains(&self, q: &Rational) -> bool {
        &self.lo <= q && q <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&Rational::zero())
    }

    pub fn excludes_zero(&self) -> bool {
        self.lo.is_positive() || self.hi.is_negative()
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = if self.lo >= other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi <= other.hi { &self.hi } else { &other.hi };
        if lo <= hi {
            Some(Interval::new(lo.clone(), hi.clone()))
        } else {
            None
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval::new(&self.lo + &other.lo, &self.hi + &other.hi)
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        Interval::new(&self.lo - &other.hi, &self.hi - &other.lo)
    }

    pub fn neg(&self) -> Interval {
        Interval::new(-self.hi.clone(), -self.lo.clone())
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let cands = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = cands.iter().min().unwrap().clone();
        let hi = cands.iter().max().unwrap().clone();
        Interval::new(lo, hi)
    }

    pub fn scale(&self, q: &Rational) -> Interval {
        if q.is_negative() {
            Interval::new(&self.hi * q, &self.lo * q)
        } else {
            Interval::new(&self.lo * q, &self.hi * q)
        }
    }

    /// Enclosure of |x| for x in the interval.
    pub fn abs(&self) -> Interval {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            let hi = std::cmp::max(-self.lo.clone(), self.hi.clone());
            Interval::new(Rational::zero(), hi)
        }
    }

    /// Reciprocal; requires the interval to exclude zero.
    pub fn recip(&self) -> Interval {
        assert!(self.excludes_zero(), "reciprocal of interval containing 0");
        Interval::new(self.hi.recip(), self.lo.recip())
    }

    /// Outward rounding of both endpoints to the dyadic grid 2^-bits.
    pub fn round_out(&self, bits: u32) -> Interval {
        Interval::new(floor_dyadic(&self.lo, bits), ceil_dyadic(&self.hi, bits))
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(
            std::cmp::min(self.lo.clone(), other.lo.clone()),
            std::cmp::max(self.hi.clone(), other.hi.clone()),
        )
    }

    /// True when the width is at most 2^-k.
    pub fn width_within(&self, k: u32) -> bool {
        self.width() <= pow2(-(k as i64))
    }

    /// Sum of a family of intervals.
    pub fn sum<'a>(terms: impl IntoIterator<Item = &'a Interval>) -> Interval {
        terms
            .into_iter()
            .fold(Interval::zero(), |acc, t| acc.add(t))
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]",
            rational_to_string(&self.lo),
            rational_to_string(&self.hi)
        )
    }
}

#[derive(Serialize, Deserialize)]
struct IntervalWire {
    lo: String,
    hi: String,
}

impl Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        IntervalWire {
            lo: rational_to_string(&self.lo),
            hi: rational_to_string(&self.hi),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = IntervalWire::deserialize(d)?;
        let lo = crate::num::rational_from_string(&w.lo).map_err(serde::de::Error::custom)?;
        let hi = crate::num::rational_from_string(&w.hi).map_err(serde::de::Error::custom)?;
        if lo > hi {
            return Err(serde::de::Error::custom("interval endpoints out of order"));
        }
        Ok(Interval { lo, hi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, rat_int};

    #[test]
    fn rounding_is_outward() {
        let iv = Interval::new(rat(1, 3), rat(2, 3));
        let r = iv.round_out(4);
        assert!(r.lo() <= &rat(1, 3) && r.hi() >= &rat(2, 3));
        assert!(r.width() <= iv.width() + rat(2, 16));
        assert_eq!(floor_dyadic(&rat(1, 3), 2), rat(1, 4));
        assert_eq!(ceil_dyadic(&rat(1, 3), 2), rat(1, 2));
        assert_eq!(floor_dyadic(&rat(-1, 3), 2), rat(-1, 2));
    }

    #[test]
    fn multiplication_signs() {
        let a = Interval::new(rat_int(-1), rat_int(2));
        let b = Interval::new(rat_int(-3), rat_int(1));
        let p = a.mul(&b);
        assert_eq!(p, Interval::new(rat_int(-6), rat_int(3)));
    }

    #[test]
    fn recip_and_abs() {
        let a = Interval::new(rat(1, 2), rat_int(2));
        assert_eq!(a.recip(), Interval::new(rat(1, 2), rat_int(2)));
        let b = Interval::new(rat_int(-2), rat_int(1));
        assert_eq!(b.abs(), Interval::new(rat_int(0), rat_int(2)));
    }
}

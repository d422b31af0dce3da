//! Exact rational and complex-rational scalars.
//!
//! `Rational` is an arbitrary-precision fraction kept in lowest terms with a
//! positive denominator (both guaranteed by `num_rational::BigRational`).
//! `ComplexRational` is an element of Q(i).

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub type Int = BigInt;
pub type Rational = num_rational::BigRational;

/// Construct a rational from an integer pair.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(Int::from(n), Int::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(Int::from(n))
}

/// 2^e for a signed exponent.
pub fn pow2(e: i64) -> Rational {
    if e >= 0 {
        Rational::from_integer(Int::one() << (e as usize))
    } else {
        Rational::new(Int::one(), Int::one() << ((-e) as usize))
    }
}

/// Serialize a rational as "num/den" ("num" when the denominator is 1).
pub fn rational_to_string(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parse "num/den" or "num".
pub fn rational_from_string(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: Int = n
        .trim()
        .parse()
        .map_err(|_| format!("bad numerator in {s:?}"))?;
    let d: Int = d
        .trim()
        .parse()
        .map_err(|_| format!("bad denominator in {s:?}"))?;
    if d.is_zero() {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(Rational::new(n, d))
}

/// An element of Q(i).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComplexRational {
    pub re: Rational,
    pub im: Rational,
}

impl ComplexRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        ComplexRational { re, im }
    }

    pub fn from_rational(re: Rational) -> Self {
        ComplexRational {
            re,
            im: Rational::zero(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(rat_int(n))
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn i() -> Self {
        ComplexRational::new(Rational::zero(), Rational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// |z|^2, exact.
    pub fn abs_sq(&self) -> Rational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn conj(&self) -> Self {
        ComplexRational::new(self.re.clone(), -self.im.clone())
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self) -> Self {
        let n = self.abs_sq();
        assert!(!n.is_zero(), "inverse of zero");
        ComplexRational::new(&self.re / &n, -&self.im / &n)
    }

    pub fn scale(&self, q: &Rational) -> Self {
        ComplexRational::new(&self.re * q, &self.im * q)
    }

    /// |re| + |im|, a cheap exact upper bound for the modulus.
    pub fn abs_bound(&self) -> Rational {
        self.re.abs() + self.im.abs()
    }
}

impl Add for &ComplexRational {
    type Output = ComplexRational;
    fn add(self, rhs: &ComplexRational) -> ComplexRational {
        ComplexRational::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub for &ComplexRational {
    type Output = ComplexRational;
    fn sub(self, rhs: &ComplexRational) -> ComplexRational {
        ComplexRational::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul for &ComplexRational {
    type Output = ComplexRational;
    fn mul(self, rhs: &ComplexRational) -> ComplexRational {
        ComplexRational::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Neg for &ComplexRational {
    type Output = ComplexRational;
    fn neg(self) -> ComplexRational {
        ComplexRational::new(-self.re.clone(), -self.im.clone())
    }
}

impl fmt::Debug for ComplexRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}+{}i",
            rational_to_string(&self.re),
            rational_to_string(&self.im)
        )
    }
}

/// Wire form: {"re": "a/b", "im": "c/d"}.
#[derive(Serialize, Deserialize)]
struct ComplexWire {
    re: String,
    im: String,
}

impl Serialize for ComplexRational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ComplexWire {
            re: rational_to_string(&self.re),
            im: rational_to_string(&self.im),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexRational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = ComplexWire::deserialize(d)?;
        let re = rational_from_string(&w.re).map_err(serde::de::Error::custom)?;
        let im = rational_from_string(&w.im).map_err(serde::de::Error::custom)?;
        Ok(ComplexRational::new(re, im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip() {
        let q = rat(-3, 12);
        let s = rational_to_string(&q);
        assert_eq!(s, "-1/4");
        assert_eq!(rational_from_string(&s).unwrap(), q);
        assert_eq!(rational_from_string("7").unwrap(), rat_int(7));
        assert!(rational_from_string("1/0").is_err());
    }

    #[test]
    fn complex_arithmetic() {
        let z = ComplexRational::new(rat_int(1), rat_int(1));
        let w = z.inv();
        assert_eq!(&z * &w, ComplexRational::one());
        assert_eq!(w, ComplexRational::new(rat(1, 2), rat(-1, 2)));
        assert_eq!(z.abs_sq(), rat_int(2));
    }

    #[test]
    fn pow2_signs() {
        assert_eq!(pow2(3), rat_int(8));
        assert_eq!(pow2(-2), rat(1, 4));
        assert_eq!(pow2(0), rat_int(1));
    }
}

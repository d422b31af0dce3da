//! Precision-indexed interval enclosures of the irrational quantities the
//! workbench needs: |z|^p, x^{1/p}, and the sigma constant |4 - 2*sqrt(2)^p|^-1.
//!
//! Every operation takes an explicit precision `k` and returns a rational
//! interval of width at most 2^-k containing the exact value.  Rational
//! exponents take an exact integer-power / integer-root path; enclosure-valued
//! exponents go through validated exp/ln with argument reduction.

use crate::interval::{ceil_dyadic, floor_dyadic, Interval};
use crate::num::{pow2, rat, rat_int, ComplexRational, Int, Rational};
use crate::{Error, Result};
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::sync::{Arc, Mutex};

/// A computable real: a deterministic map from precision k to a rational
/// interval of width <= 2^-k.  Successive refinements are intersected, so the
/// sequence returned by `refine` is nested.
#[derive(Clone)]
pub struct Enclosure {
    raw: Arc<dyn Fn(u32) -> Interval + Send + Sync>,
    cache: Arc<Mutex<Vec<Interval>>>,
}

impl Enclosure {
    pub fn new(f: impl Fn(u32) -> Interval + Send + Sync + 'static) -> Self {
        Enclosure {
            raw: Arc::new(f),
            cache: Arc::new(Mutex::new(Vec::new())),
        }
    }

    pub fn from_rational(q: Rational) -> Self {
        Enclosure::new(move |_| Interval::point(q.clone()))
    }

    /// Interval of width <= 2^-k containing the represented real; nested in k.
    pub fn refine(&self, k: u32) -> Interval {
        let mut cache = self.cache.lock().unwrap();
        while cache.len() <= k as usize {
            let j = cache.len() as u32;
            let raw = (self.raw)(j);
            assert!(
                raw.width() <= pow2(-(j as i64)),
                "enclosure contract violated: width {} at precision {}",
                raw.width(),
                j
            );
            let iv = match cache.last() {
                Some(prev) => prev
                    .intersect(&raw)
                    .expect("enclosure contract violated: refinements disjoint"),
                None => raw,
            };
            cache.push(iv);
        }
        cache[k as usize].clone()
    }
}

impl std::fmt::Debug for Enclosure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Enclosure({:?})", self.refine(10))
    }
}

/// The exponent p >= 1 of an L^p space: an exact rational or a computable real.
#[derive(Clone, Debug)]
pub enum ExponentValue {
    Rational(Rational),
    Enclosure(Enclosure),
}

#[derive(Clone, Debug)]
pub struct Exponent {
    value: ExponentValue,
    not_two: bool,
}

impl Exponent {
    /// Exact rational exponent; `not_two` follows from exact comparison.
    pub fn rational(q: Rational) -> Self {
        assert!(q >= Rational::one(), "exponent must be >= 1");
        let not_two = q != rat_int(2);
        Exponent {
            value: ExponentValue::Rational(q),
            not_two,
        }
    }

    pub fn from_ints(n: i64, d: i64) -> Self {
        Exponent::rational(rat(n, d))
    }

    /// Enclosure-valued exponent.  Certification that p != 2 is attempted up
    /// to precision `max_k`.
    pub fn enclosure(e: Enclosure, max_k: u32) -> Self {
        let mut not_two = false;
        for k in 0..=max_k {
            let iv = e.refine(k);
            if !iv.contains(&rat_int(2)) {
                not_two = true;
                break;
            }
        }
        Exponent {
            value: ExponentValue::Enclosure(e),
            not_two,
        }
    }

    pub fn value(&self) -> &ExponentValue {
        &self.value
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match &self.value {
            ExponentValue::Rational(q) => Some(q),
            ExponentValue::Enclosure(_) => None,
        }
    }

    pub fn not_two(&self) -> bool {
        self.not_two
    }

    pub fn require_not_two(&self) -> Result<()> {
        if self.not_two {
            Ok(())
        } else {
            Err(Error::PEqualsTwo)
        }
    }

    /// Interval of width <= 2^-k around p.
    pub fn approx(&self, k: u32) -> Interval {
        match &self.value {
            ExponentValue::Rational(q) => Interval::point(q.clone()),
            ExponentValue::Enclosure(e) => e.refine(k),
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(&self.value, ExponentValue::Rational(q) if q.is_one())
    }
}

impl PartialEq for Exponent {
    fn eq(&self, other: &Self) -> bool {
        match (&self.value, &other.value) {
            (ExponentValue::Rational(a), ExponentValue::Rational(b)) => a == b,
            _ => false,
        }
    }
}

// --- validated elementary functions on rationals ---

/// ln 2 as an interval of width <= 2^-k, from 2*atanh(1/3).
pub fn ln2(k: u32) -> Interval {
    // tail of 2*sum t^(2j+1)/(2j+1) at t=1/3 is < 3^-(2n+1) * 9/8 * 2/(2n+1)
    let t = rat(1, 3);
    atanh_series(&t, k + 2).scale(&rat_int(2)).round_out(k + 2)
}

/// atanh(t) for |t| <= 1/3 as an interval of width <= 2^-k.
fn atanh_series(t: &Rational, k: u32) -> Interval {
    debug_assert!(t.abs() <= rat(9, 26), "series argument too large");
    let target = pow2(-(k as i64 + 1));
    let t2 = t * t;
    let mut term = t.clone(); // t^(2j+1)
    let mut sum = Rational::zero();
    let mut j = 0u32;
    loop {
        sum += &term / rat_int((2 * j + 1) as i64);
        term *= &t2;
        j += 1;
        // remaining tail <= |term| / (1 - t^2) <= 2 |term|
        let tail = term.abs() * rat_int(2);
        if tail <= target {
            return Interval::new(&sum - &tail, &sum + &tail);
        }
        assert!(j < 10_000, "atanh series failed to converge");
    }
}

/// ln q for rational q > 0, as an interval of width <= 2^-k.
pub fn ln_rational(q: &Rational, k: u32) -> Interval {
    assert!(q.is_positive(), "ln of nonpositive rational");
    let kk = k + 6;
    // reduce q = 2^e * m with m in [3/4, 3/2)
    let mut e = q.numer().bits() as i64 - q.denom().bits() as i64;
    let mut m = q * pow2(-e);
    while m >= rat(3, 2) {
        m /= rat_int(2);
        e += 1;
    }
    while m < rat(3, 4) {
        m *= rat_int(2);
        e -= 1;
    }
    // cap the working denominator; ln is monotone so endpoints suffice
    let m_lo = floor_dyadic(&m, kk + 4);
    let m_hi = ceil_dyadic(&m, kk + 4);
    let ln_m = |m: &Rational| -> Interval {
        let t = (m - Rational::one()) / (m + Rational::one());
        atanh_series(&t, kk + 2).scale(&rat_int(2))
    };
    let lo_iv = ln_m(&m_lo);
    let hi_iv = ln_m(&m_hi);
    let series = Interval::new(lo_iv.lo().clone(), hi_iv.hi().clone());
    let e_bits = 64 - (e.unsigned_abs().leading_zeros() as u32).min(63);
    let ln2_iv = ln2(kk + e_bits).scale(&Rational::from_integer(Int::from(e)));
    series.add(&ln2_iv).round_out(k + 2)
}

/// e^x for rational x, as an interval of width <= 2^-k.
pub fn exp_rational(x: &Rational, k: u32) -> Interval {
    // n = nearest integer to x / ln 2; remainder |r| < 0.4
    let l2 = ln2(24);
    let n_rat = (x / l2.mid() + rat(1, 2)).floor();
    let n = n_rat.numer().clone();
    // absolute output error scales with 2^n for n > 0
    let n_mag = n.to_i64().unwrap_or(i64::MAX).unsigned_abs().min(1 << 20);
    let kk = k + 6 + if n.is_positive() { n_mag as u32 } else { 0 };
    let l2k = ln2(kk + 8);
    let n_q = Rational::from_integer(n.clone());
    let r_lo = x - n_q.clone() * l2k.hi();
    let r_hi = x - n_q.clone() * l2k.lo();
    let lo = exp_small(&floor_dyadic(&r_lo, kk + 8), kk + 2);
    let hi = exp_small(&ceil_dyadic(&r_hi, kk + 8), kk + 2);
    let scale = match n.to_i64() {
        Some(e) => pow2(e),
        None => panic!("exp argument out of range"),
    };
    Interval::new(lo.lo().clone(), hi.hi().clone())
        .scale(&scale)
        .round_out(k + 2)
}

/// Taylor series for e^r, |r| <= 1.
fn exp_small(r: &Rational, k: u32) -> Interval {
    debug_assert!(r.abs() <= Rational::one());
    let target = pow2(-(k as i64 + 1));
    let mut term = Rational::one(); // r^j / j!
    let mut sum = Rational::zero();
    let mut j = 0u64;
    loop {
        sum += &term;
        j += 1;
        term = term * r / rat_int(j as i64);
        // once j >= 2 the remaining tail is <= 2 |term|
        if j >= 2 {
            let tail = term.abs() * rat_int(2);
            if tail <= target {
                return Interval::new(&sum - &tail, &sum + &tail);
            }
        }
        assert!(j < 10_000, "exp series failed to converge");
    }
}

/// r^(1/c) for rational r >= 0 and integer c >= 1, width <= 2^-k, by bisection.
pub fn root_rational(r: &Rational, c: u32, k: u32) -> Interval {
    assert!(!r.is_negative() && c >= 1);
    if r.is_zero() {
        return Interval::zero();
    }
    if c == 1 || r.is_one() {
        return Interval::point(r.clone());
    }
    if let Some(x) = nth_root_exact(r, c) {
        return Interval::point(x);
    }
    let one = Rational::one();
    let (mut lo, mut hi) = if r > &one {
        (one.clone(), r.clone())
    } else {
        (r.clone(), one.clone())
    };
    let target = pow2(-(k as i64));
    while &hi - &lo > target {
        let mid = (&lo + &hi) / rat_int(2);
        if mid.pow(c as i32) <= *r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Interval::new(lo, hi)
}

/// Exact rational c-th root when it exists.
fn nth_root_exact(r: &Rational, c: u32) -> Option<Rational> {
    let rn = nth_root_int(r.numer(), c)?;
    let rd = nth_root_int(r.denom(), c)?;
    Some(Rational::new(rn, rd))
}

fn nth_root_int(x: &Int, c: u32) -> Option<Int> {
    if x.is_zero() || x.is_one() {
        return Some(x.clone());
    }
    let root = x.nth_root(c);
    if num_traits::pow(root.clone(), c as usize) == *x {
        Some(root)
    } else {
        None
    }
}

/// Refine `eval` until the result (after outward rounding) has width <= 2^-k.
pub(crate) fn refine_to_width(k: u32, mut eval: impl FnMut(u32) -> Interval) -> Interval {
    let mut kk = k + 3;
    loop {
        let iv = eval(kk).round_out(k + 4);
        if iv.width_within(k) {
            return iv;
        }
        kk += 8;
        assert!(kk < k + 4096, "interval refinement failed to converge");
    }
}

/// q^(a/b) for rational q >= 0, via exact integer power and integer root when
/// the sizes allow, otherwise exp((a/b) ln q).
fn pow_rational_exponent(q: &Rational, a: &Int, b: &Int, k: u32) -> Interval {
    debug_assert!(!q.is_negative() && b.is_positive());
    if q.is_zero() {
        return Interval::zero();
    }
    if q.is_one() || a.is_zero() {
        return Interval::point(if a.is_zero() {
            Rational::one()
        } else {
            Rational::one()
        });
    }
    let q_bits = (q.numer().bits() + q.denom().bits()) as u64;
    let a_mag = a.magnitude().to_u64();
    let b_small = b.to_u32();
    if let (Some(am), Some(bs)) = (a_mag, b_small) {
        if am.saturating_mul(q_bits) <= 1 << 16 && am <= i32::MAX as u64 {
            let powed = q.pow(am as i32);
            let iv = root_rational(&powed, bs, k + 2);
            return if a.is_negative() { iv.recip() } else { iv };
        }
    }
    // general path through exp/ln
    let p = Rational::new(a.clone(), b.clone());
    refine_to_width(k, |kk| {
        let ln_q = ln_rational(q, kk + 8);
        let y = ln_q.scale(&p);
        exp_over_interval(&y, kk + 2)
    })
}

/// e^y over an interval, by monotonicity.
fn exp_over_interval(y: &Interval, k: u32) -> Interval {
    let lo = exp_rational(y.lo(), k + 1);
    let hi = exp_rational(y.hi(), k + 1);
    Interval::new(lo.lo().clone(), hi.hi().clone())
}

/// q^p for rational q >= 0 and exponent p, width <= 2^-k.
pub fn pow_rat(q: &Rational, p: &Exponent, k: u32) -> Interval {
    assert!(!q.is_negative());
    match p.value() {
        ExponentValue::Rational(pr) => {
            refine_to_width(k, |kk| pow_rational_exponent(q, pr.numer(), pr.denom(), kk))
        }
        ExponentValue::Enclosure(e) => {
            if q.is_zero() {
                return Interval::zero();
            }
            if q.is_one() {
                return Interval::point(Rational::one());
            }
            refine_to_width(k, |kk| {
                let ln_q = ln_rational(q, kk + 8);
                let y = e.refine(kk + 8).mul(&ln_q);
                exp_over_interval(&y, kk + 2)
            })
        }
    }
}

/// |z|^p as an interval of width <= 2^-k.  |z|^2 is exact rational, so this
/// is (|z|^2)^(p/2) and no square root is taken.
pub fn pow_abs(z: &ComplexRational, p: &Exponent, k: u32) -> Interval {
    let b = z.abs_sq();
    match p.value() {
        ExponentValue::Rational(pr) => {
            let half = pr / rat_int(2);
            refine_to_width(k, |kk| {
                pow_rational_exponent(&b, half.numer(), half.denom(), kk)
            })
        }
        ExponentValue::Enclosure(e) => {
            if b.is_zero() {
                return Interval::zero();
            }
            if b.is_one() {
                return Interval::point(Rational::one());
            }
            refine_to_width(k, |kk| {
                let ln_b = ln_rational(&b, kk + 8);
                let y = e.refine(kk + 8).mul(&ln_b).scale(&rat(1, 2));
                exp_over_interval(&y, kk + 2)
            })
        }
    }
}

/// Exact rational value of |z|^p when one exists (p rational only).
pub fn pow_abs_exact(z: &ComplexRational, p: &Exponent) -> Option<Rational> {
    let pr = p.as_rational()?;
    if z.is_zero() {
        return Some(Rational::zero());
    }
    let b = z.abs_sq();
    if b.is_one() {
        return Some(Rational::one());
    }
    let half = pr / rat_int(2); // |z|^p = b^(a/c) with a/c = p/2
    let a = half.numer().to_i32()?;
    let c = half.denom().to_u32()?;
    if (a.unsigned_abs() as u64) * ((b.numer().bits() + b.denom().bits()) as u64) > 1 << 16 {
        return None;
    }
    let powed = b.pow(a);
    nth_root_exact(&powed, c)
}

/// Exact rational p-th root t^(1/p) of a nonnegative rational, when the
/// exponent is rational a/b and the root is itself rational.
pub fn root_exact(t: &Rational, p: &Exponent) -> Option<Rational> {
    if t.is_negative() {
        return None;
    }
    if t.is_zero() {
        return Some(Rational::zero());
    }
    let pr = p.as_rational()?;
    // t^(1/p) = t^(b/a) = (t^b)^(1/a)
    let a = pr.numer().to_u32()?;
    let b = pr.denom().to_i32()?;
    if (b.unsigned_abs() as u64) * ((t.numer().bits() + t.denom().bits()) as u64) > 1 << 16 {
        return None;
    }
    nth_root_exact(&t.pow(b), a)
}

/// Enclosure of { t^(1/p) : t in x }, for x.lo >= 0.  The result width is
/// 2^-k plus the image of x's own width (t^(1/p) is 1-Lipschitz on [1,inf)
/// and Holder on [0,1], so the growth is bounded by root(width)).
pub fn root(x: &Interval, p: &Exponent, k: u32) -> Result<Interval> {
    if x.lo().is_negative() {
        return Err(Error::NegativeInput);
    }
    let lower = root_point_lo(x.lo(), p, k + 1);
    let upper = root_point_hi(x.hi(), p, k + 1);
    Ok(Interval::new(lower, upper))
}

fn root_point_lo(t: &Rational, p: &Exponent, k: u32) -> Rational {
    root_point(t, p, k).lo().clone()
}

fn root_point_hi(t: &Rational, p: &Exponent, k: u32) -> Rational {
    root_point(t, p, k).hi().clone()
}

/// t^(1/p) for a single rational t >= 0.
pub fn root_point(t: &Rational, p: &Exponent, k: u32) -> Interval {
    if t.is_zero() {
        return Interval::zero();
    }
    if t.is_one() {
        return Interval::point(Rational::one());
    }
    match p.value() {
        ExponentValue::Rational(pr) => {
            // t^(b/a) for p = a/b
            refine_to_width(k, |kk| pow_rational_exponent(t, pr.denom(), pr.numer(), kk))
        }
        ExponentValue::Enclosure(e) => refine_to_width(k, |kk| {
            let ln_t = ln_rational(t, kk + 8);
            let p_iv = e.refine(kk + 8);
            let y = ln_t.mul(&p_iv.recip());
            exp_over_interval(&y, kk + 2)
        }),
    }
}

/// Monotone image { t^p : t in x } for x.lo >= 0, width <= 2^-k plus growth
/// from x's width.
pub fn pow_interval(x: &Interval, p: &Exponent, k: u32) -> Result<Interval> {
    if x.lo().is_negative() {
        return Err(Error::NegativeInput);
    }
    let lo = pow_rat(x.lo(), p, k + 1);
    let hi = pow_rat(x.hi(), p, k + 1);
    Ok(Interval::new(lo.lo().clone(), hi.hi().clone()))
}

/// The sigma coefficient |4 - 2 sqrt(2)^p|^-1, width <= 2^-k.
/// Requires p certified different from 2.
pub fn sigma_constant(p: &Exponent, k: u32) -> Result<Interval> {
    p.require_not_two()?;
    // refine sqrt(2)^p until 4 - 2 sqrt(2)^p excludes zero, then invert
    let mut kk = k + 4;
    loop {
        let s = pow_rat(&rat_int(2), &half_exponent(p), kk);
        let d = Interval::point(rat_int(4)).sub(&s.scale(&rat_int(2)));
        if d.excludes_zero() {
            let inv = d.abs().recip();
            if inv.width_within(k) {
                return Ok(inv.round_out(k + 4));
            }
        }
        kk += 8;
        if kk > k + 4096 {
            return Err(Error::PEqualsTwo);
        }
    }
}

/// p/2 as an exponent-like value for powering (not itself a valid Exponent,
/// since it may be < 1; used only as a powering exponent).
fn half_exponent(p: &Exponent) -> Exponent {
    match p.value() {
        ExponentValue::Rational(q) => Exponent {
            value: ExponentValue::Rational(q / rat_int(2)),
            not_two: p.not_two(),
        },
        ExponentValue::Enclosure(e) => {
            let e = e.clone();
            Exponent {
                value: ExponentValue::Enclosure(Enclosure::new(move |k| {
                    e.refine(k + 1).scale(&rat(1, 2))
                })),
                not_two: p.not_two(),
            }
        }
    }
}

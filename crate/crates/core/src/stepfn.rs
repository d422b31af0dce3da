//! Complex-rational step functions on [0,1] with half-open cells: the fully
//! decidable carrier of L^p vectors at desk scale.  Pointwise algebra, the
//! subvector order, supports, and enclosed L^p norms are all exact.

use crate::dyadic::DyadicSet;
use crate::enclosure::{pow_abs, pow_abs_exact, root, Exponent};
use crate::interval::Interval;
use crate::num::{rational_from_string, rational_to_string, ComplexRational, Rational};
use crate::Result;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

/// A step function on [0,1): value `vals[j]` on the half-open cell
/// `[breaks[j], breaks[j+1])`.  Canonical form: `breaks` strictly increasing
/// from 0 to 1, adjacent equal values merged.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StepFn {
    breaks: Vec<Rational>,
    vals: Vec<ComplexRational>,
}

impl StepFn {
    /// Build from raw cell data, canonicalizing.
    pub fn new(breaks: Vec<Rational>, vals: Vec<ComplexRational>) -> Self {
        assert!(breaks.len() == vals.len() + 1, "cell count mismatch");
        assert!(breaks.first() == Some(&Rational::zero()), "domain must start at 0");
        assert!(breaks.last() == Some(&Rational::one()), "domain must end at 1");
        assert!(
            breaks.windows(2).all(|w| w[0] < w[1]),
            "breakpoints not strictly increasing"
        );
        let mut out_breaks = vec![Rational::zero()];
        let mut out_vals: Vec<ComplexRational> = Vec::new();
        for (j, v) in vals.into_iter().enumerate() {
            match out_vals.last() {
                Some(last) if *last == v => {}
                _ => {
                    if j > 0 {
                        out_breaks.push(breaks[j].clone());
                    }
                    out_vals.push(v);
                }
            }
        }
        out_breaks.push(Rational::one());
        StepFn {
            breaks: out_breaks,
            vals: out_vals,
        }
    }

    pub fn zero() -> Self {
        StepFn {
            breaks: vec![Rational::zero(), Rational::one()],
            vals: vec![ComplexRational::zero()],
        }
    }

    /// The characteristic function of a set.
    pub fn indicator(set: &DyadicSet) -> Self {
        StepFn::indicator_scaled(set, &ComplexRational::one())
    }

    /// `c` on the set, 0 elsewhere.
    pub fn indicator_scaled(set: &DyadicSet, c: &ComplexRational) -> Self {
        let mut breaks = vec![Rational::zero()];
        let mut vals = Vec::new();
        for (lo, hi) in set.spans() {
            if breaks.last().unwrap() < lo {
                vals.push(ComplexRational::zero());
                breaks.push(lo.clone());
            }
            vals.push(c.clone());
            breaks.push(hi.clone());
        }
        if breaks.last().unwrap() < &Rational::one() {
            vals.push(ComplexRational::zero());
            breaks.push(Rational::one());
        }
        if vals.is_empty() {
            return StepFn::zero();
        }
        StepFn::new(breaks, vals)
    }

    /// The constant function.
    pub fn constant(c: ComplexRational) -> Self {
        StepFn {
            breaks: vec![Rational::zero(), Rational::one()],
            vals: vec![c],
        }
    }

    pub fn breaks(&self) -> &[Rational] {
        &self.breaks
    }

    pub fn vals(&self) -> &[ComplexRational] {
        &self.vals
    }

    /// Iterate over cells as (lo, hi, value).
    pub fn cells(&self) -> impl Iterator<Item = (&Rational, &Rational, &ComplexRational)> {
        self.breaks
            .windows(2)
            .zip(&self.vals)
            .map(|(w, v)| (&w[0], &w[1], v))
    }

    pub fn is_zero(&self) -> bool {
        self.vals.iter().all(|v| v.is_zero())
    }

    pub fn eval(&self, t: &Rational) -> ComplexRational {
        assert!(!t.is_negative() && t < &Rational::one(), "point outside [0,1)");
        // last breakpoint <= t
        let j = match self.breaks.binary_search(t) {
            Ok(j) => j,
            Err(j) => j - 1,
        };
        self.vals[j.min(self.vals.len() - 1)].clone()
    }

    /// Re-express both functions on the union of their breakpoint lists.
    pub fn refine_common(f: &StepFn, g: &StepFn) -> (StepFn, StepFn) {
        let breaks = merge_breaks(&[f, g]);
        (f.on_breaks(&breaks), g.on_breaks(&breaks))
    }

    /// Re-express on a superset of this function's breakpoints (not
    /// canonicalized; the cell structure matches `breaks` exactly).
    fn on_breaks(&self, breaks: &[Rational]) -> StepFn {
        let mut vals = Vec::with_capacity(breaks.len() - 1);
        let mut j = 0;
        for lo in &breaks[..breaks.len() - 1] {
            while j + 1 < self.vals.len() && &self.breaks[j + 1] <= lo {
                j += 1;
            }
            vals.push(self.vals[j].clone());
        }
        StepFn {
            breaks: breaks.to_vec(),
            vals,
        }
    }

    /// Exact pointwise linear combination, in canonical form.
    pub fn linear_combine(terms: &[(ComplexRational, &StepFn)]) -> StepFn {
        if terms.is_empty() {
            return StepFn::zero();
        }
        let fns: Vec<&StepFn> = terms.iter().map(|(_, f)| *f).collect();
        let breaks = merge_breaks(&fns);
        let refined: Vec<StepFn> = fns.iter().map(|f| f.on_breaks(&breaks)).collect();
        let mut vals = vec![ComplexRational::zero(); breaks.len() - 1];
        for ((c, _), rf) in terms.iter().zip(&refined) {
            for (slot, v) in vals.iter_mut().zip(&rf.vals) {
                *slot = &*slot + &(c * v);
            }
        }
        StepFn::new(breaks, vals)
    }

    pub fn add(&self, other: &StepFn) -> StepFn {
        StepFn::linear_combine(&[
            (ComplexRational::one(), self),
            (ComplexRational::one(), other),
        ])
    }

    pub fn sub(&self, other: &StepFn) -> StepFn {
        StepFn::linear_combine(&[
            (ComplexRational::one(), self),
            (ComplexRational::from_int(-1), other),
        ])
    }

    pub fn scale(&self, c: &ComplexRational) -> StepFn {
        StepFn::linear_combine(&[(c.clone(), self)])
    }

    /// Exact pointwise product.
    pub fn mul(&self, other: &StepFn) -> StepFn {
        let (f, g) = StepFn::refine_common(self, other);
        let vals = f.vals.iter().zip(&g.vals).map(|(a, b)| a * b).collect();
        StepFn::new(f.breaks, vals)
    }

    /// f restricted to a set: f * indicator(set).
    pub fn restrict(&self, set: &DyadicSet) -> StepFn {
        self.mul(&StepFn::indicator(set))
    }

    /// Exact support {t : f(t) != 0}.
    pub fn support(&self) -> DyadicSet {
        let spans = self
            .cells()
            .filter(|(_, _, v)| !v.is_zero())
            .map(|(lo, hi, _)| (lo.clone(), hi.clone()))
            .collect();
        DyadicSet::from_spans(spans)
    }

    /// Exact decision of the subvector order f <= g (f = g on supp f).
    pub fn subvector_le(&self, other: &StepFn) -> bool {
        let (f, g) = StepFn::refine_common(self, other);
        f.vals
            .iter()
            .zip(&g.vals)
            .all(|(a, b)| a.is_zero() || a == b)
    }

    /// The subvector-order infimum: f restricted to {t : f(t) = g(t)}.
    pub fn meet(&self, other: &StepFn) -> StepFn {
        let (f, g) = StepFn::refine_common(self, other);
        let vals = f
            .vals
            .iter()
            .zip(&g.vals)
            .map(|(a, b)| if a == b { a.clone() } else { ComplexRational::zero() })
            .collect();
        StepFn::new(f.breaks, vals)
    }

    /// A step function s with supp(s) = supp(f) and s*f = indicator(supp f).
    pub fn reciprocal_witness(&self) -> StepFn {
        let vals = self
            .vals
            .iter()
            .map(|v| {
                if v.is_zero() {
                    ComplexRational::zero()
                } else {
                    v.inv()
                }
            })
            .collect();
        StepFn {
            breaks: self.breaks.clone(),
            vals,
        }
    }

    pub fn conj(&self) -> StepFn {
        StepFn {
            breaks: self.breaks.clone(),
            vals: self.vals.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Enclosure of the p-th power of the norm: sum over cells of
    /// |value|^p * length.  Width <= 2^-k.
    pub fn norm_p_pow(&self, p: &Exponent, k: u32) -> Interval {
        let cells: Vec<_> = self
            .cells()
            .filter(|(_, _, v)| !v.is_zero())
            .map(|(lo, hi, v)| (hi - lo, v.clone()))
            .collect();
        if cells.is_empty() {
            return Interval::zero();
        }
        // distribute precision over the cells
        let extra = u32::BITS - (cells.len() as u32).leading_zeros();
        let kk = k + extra + 1;
        let mut total = Interval::zero();
        for (len, v) in &cells {
            let term = pow_abs(v, p, kk).scale(len);
            total = total.add(&term);
        }
        total
    }

    /// Exact rational value of the p-th norm power when every cell admits one.
    pub fn norm_p_pow_exact(&self, p: &Exponent) -> Option<Rational> {
        let mut total = Rational::zero();
        for (lo, hi, v) in self.cells() {
            if v.is_zero() {
                continue;
            }
            total += pow_abs_exact(v, p)? * (hi - lo);
        }
        Some(total)
    }

    /// Exact rational L^p norm when both the norm power and its root are
    /// rational.
    pub fn norm_p_exact(&self, p: &Exponent) -> Option<Rational> {
        crate::enclosure::root_exact(&self.norm_p_pow_exact(p)?, p)
    }

    /// Enclosure of the L^p norm, width <= 2^-k.
    pub fn norm_p(&self, p: &Exponent, k: u32) -> Result<Interval> {
        let mut kk = k + 2;
        loop {
            let pw = self.norm_p_pow(p, kk);
            let r = root(&pw, p, kk)?;
            if r.width_within(k) {
                return Ok(r.round_out(k + 4));
            }
            kk += 8;
            assert!(kk < k + 4096, "norm refinement failed to converge");
        }
    }
}

fn merge_breaks(fns: &[&StepFn]) -> Vec<Rational> {
    let mut breaks: Vec<Rational> = fns.iter().flat_map(|f| f.breaks.iter().cloned()).collect();
    breaks.sort();
    breaks.dedup();
    breaks
}

impl fmt::Debug for StepFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StepFn{{")?;
        for (i, (lo, hi, v)) in self.cells().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(
                f,
                "[{},{}): {:?}",
                rational_to_string(lo),
                rational_to_string(hi),
                v
            )?;
        }
        write!(f, "}}")
    }
}

/// Wire form: {"pieces":[{"lo","hi","re","im"}]} with implicit zero elsewhere.
#[derive(Serialize, Deserialize)]
struct PieceWire {
    lo: String,
    hi: String,
    re: String,
    im: String,
}

#[derive(Serialize, Deserialize)]
struct StepFnWire {
    pieces: Vec<PieceWire>,
}

impl Serialize for StepFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pieces = self
            .cells()
            .filter(|(_, _, v)| !v.is_zero())
            .map(|(lo, hi, v)| PieceWire {
                lo: rational_to_string(lo),
                hi: rational_to_string(hi),
                re: rational_to_string(&v.re),
                im: rational_to_string(&v.im),
            })
            .collect();
        StepFnWire { pieces }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for StepFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let wire = StepFnWire::deserialize(d)?;
        let mut terms = Vec::with_capacity(wire.pieces.len());
        for p in &wire.pieces {
            let lo = rational_from_string(&p.lo).map_err(D::Error::custom)?;
            let hi = rational_from_string(&p.hi).map_err(D::Error::custom)?;
            let re = rational_from_string(&p.re).map_err(D::Error::custom)?;
            let im = rational_from_string(&p.im).map_err(D::Error::custom)?;
            if lo.is_negative() || hi > Rational::one() || lo >= hi {
                return Err(D::Error::custom("piece outside [0,1) or empty"));
            }
            terms.push(StepFn::indicator_scaled(
                &DyadicSet::interval(lo, hi),
                &ComplexRational::new(re, im),
            ));
        }
        let refs: Vec<(ComplexRational, &StepFn)> = terms
            .iter()
            .map(|f| (ComplexRational::one(), f))
            .collect();
        Ok(StepFn::linear_combine(&refs))
    }
}

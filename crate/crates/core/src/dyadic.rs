//! Finite unions of half-open rational subintervals of [0,1), with exact
//! Boolean operations and exact Lebesgue measure.  These are the measurable
//! sets on which every step function in the workbench lives.

use crate::num::{rational_to_string, Rational};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

/// A finite union of half-open intervals `[lo, hi)` inside `[0, 1)`, kept
/// sorted, pairwise disjoint, and non-adjacent (canonical form).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicSet {
    spans: Vec<(Rational, Rational)>,
}

impl DyadicSet {
    pub fn empty() -> Self {
        DyadicSet { spans: Vec::new() }
    }

    pub fn full() -> Self {
        DyadicSet::interval(Rational::zero(), Rational::one())
    }

    /// The single interval `[lo, hi)`; empty when `lo >= hi`.
    pub fn interval(lo: Rational, hi: Rational) -> Self {
        assert!(!lo.is_negative() && hi <= Rational::one(), "span outside [0,1)");
        if lo >= hi {
            DyadicSet::empty()
        } else {
            DyadicSet {
                spans: vec![(lo, hi)],
            }
        }
    }

    /// Build from arbitrary (possibly overlapping, unsorted) spans.
    pub fn from_spans(mut spans: Vec<(Rational, Rational)>) -> Self {
        spans.retain(|(lo, hi)| lo < hi);
        for (lo, hi) in &spans {
            assert!(!lo.is_negative() && hi <= &Rational::one(), "span outside [0,1)");
        }
        spans.sort();
        let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(spans.len());
        for (lo, hi) in spans {
            match out.last_mut() {
                Some((_, phi)) if lo <= *phi => {
                    if hi > *phi {
                        *phi = hi;
                    }
                }
                _ => out.push((lo, hi)),
            }
        }
        DyadicSet { spans: out }
    }

    pub fn spans(&self) -> &[(Rational, Rational)] {
        &self.spans
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Exact Lebesgue measure.
    pub fn measure(&self) -> Rational {
        self.spans
            .iter()
            .fold(Rational::zero(), |acc, (lo, hi)| acc + (hi - lo))
    }

    pub fn contains_point(&self, t: &Rational) -> bool {
        self.spans.iter().any(|(lo, hi)| lo <= t && t < hi)
    }

    pub fn union(&self, other: &DyadicSet) -> DyadicSet {
        let mut spans = self.spans.clone();
        spans.extend(other.spans.iter().cloned());
        DyadicSet::from_spans(spans)
    }

    pub fn intersect(&self, other: &DyadicSet) -> DyadicSet {
        let mut out = Vec::new();
        for (alo, ahi) in &self.spans {
            for (blo, bhi) in &other.spans {
                let lo = std::cmp::max(alo, blo);
                let hi = std::cmp::min(ahi, bhi);
                if lo < hi {
                    out.push((lo.clone(), hi.clone()));
                }
            }
        }
        DyadicSet::from_spans(out)
    }

    pub fn complement(&self) -> DyadicSet {
        let mut out = Vec::new();
        let mut cursor = Rational::zero();
        for (lo, hi) in &self.spans {
            if &cursor < lo {
                out.push((cursor.clone(), lo.clone()));
            }
            cursor = hi.clone();
        }
        if cursor < Rational::one() {
            out.push((cursor, Rational::one()));
        }
        DyadicSet { spans: out }
    }

    pub fn difference(&self, other: &DyadicSet) -> DyadicSet {
        self.intersect(&other.complement())
    }

    pub fn is_subset_of(&self, other: &DyadicSet) -> bool {
        self.difference(other).is_empty()
    }

    pub fn is_disjoint_from(&self, other: &DyadicSet) -> bool {
        self.intersect(other).is_empty()
    }

    /// All endpoints, for building common refinements.
    pub fn endpoints(&self) -> Vec<Rational> {
        let mut pts = Vec::with_capacity(2 * self.spans.len());
        for (lo, hi) in &self.spans {
            pts.push(lo.clone());
            pts.push(hi.clone());
        }
        pts
    }
}

impl fmt::Debug for DyadicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (lo, hi)) in self.spans.iter().enumerate() {
            if i > 0 {
                write!(f, " u ")?;
            }
            write!(f, "[{}, {})", rational_to_string(lo), rational_to_string(hi))?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize, Deserialize)]
struct SpanWire {
    lo: String,
    hi: String,
}

impl Serialize for DyadicSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let wire: Vec<SpanWire> = self
            .spans
            .iter()
            .map(|(lo, hi)| SpanWire {
                lo: rational_to_string(lo),
                hi: rational_to_string(hi),
            })
            .collect();
        wire.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DyadicSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let wire = Vec::<SpanWire>::deserialize(d)?;
        let mut spans = Vec::with_capacity(wire.len());
        for w in wire {
            let lo = crate::num::rational_from_string(&w.lo).map_err(serde::de::Error::custom)?;
            let hi = crate::num::rational_from_string(&w.hi).map_err(serde::de::Error::custom)?;
            if lo.is_negative() || hi > Rational::one() {
                return Err(serde::de::Error::custom("span outside [0,1)"));
            }
            spans.push((lo, hi));
        }
        Ok(DyadicSet::from_spans(spans))
    }
}

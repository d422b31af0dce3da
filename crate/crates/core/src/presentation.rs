//! Presentations of L^p spaces: generator sequences with norm oracles, the
//! standard dyadic presentation, presentations induced by computable measure
//! rings, and effective Cauchy limits.

use crate::dyadic::DyadicSet;
use crate::enclosure::{pow_abs, root, Exponent};
use crate::interval::Interval;
use crate::num::{pow2, rat, ComplexRational, Rational};
use crate::stepfn::StepFn;
use crate::{Error, Result};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

/// A finite Q(i)-linear combination of generators: index -> coefficient,
/// coefficients nonzero.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct RationalVector {
    terms: BTreeMap<u64, ComplexRational>,
}

impl RationalVector {
    pub fn new() -> Self {
        RationalVector::default()
    }

    pub fn singleton(n: u64, c: ComplexRational) -> Self {
        let mut v = RationalVector::new();
        v.set(n, c);
        v
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, ComplexRational)>) -> Self {
        let mut v = RationalVector::new();
        for (n, c) in pairs {
            v.add_term(n, &c);
        }
        v
    }

    pub fn set(&mut self, n: u64, c: ComplexRational) {
        if c.is_zero() {
            self.terms.remove(&n);
        } else {
            self.terms.insert(n, c);
        }
    }

    pub fn add_term(&mut self, n: u64, c: &ComplexRational) {
        let cur = self.terms.remove(&n).unwrap_or_else(ComplexRational::zero);
        self.set(n, &cur + c);
    }

    pub fn get(&self, n: u64) -> ComplexRational {
        self.terms.get(&n).cloned().unwrap_or_else(ComplexRational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&u64, &ComplexRational)> {
        self.terms.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn max_index(&self) -> Option<u64> {
        self.terms.keys().next_back().copied()
    }

    pub fn add(&self, other: &RationalVector) -> RationalVector {
        let mut out = self.clone();
        for (n, c) in other.iter() {
            out.add_term(*n, c);
        }
        out
    }

    pub fn sub(&self, other: &RationalVector) -> RationalVector {
        let mut out = self.clone();
        for (n, c) in other.iter() {
            out.add_term(*n, &-c);
        }
        out
    }

    pub fn scale(&self, c: &ComplexRational) -> RationalVector {
        RationalVector::from_pairs(self.iter().map(|(n, v)| (*n, c * v)))
    }
}

#[derive(Serialize, Deserialize)]
struct TermWire {
    n: u64,
    re: String,
    im: String,
}

impl Serialize for RationalVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let wire: Vec<TermWire> = self
            .terms
            .iter()
            .map(|(n, c)| TermWire {
                n: *n,
                re: crate::num::rational_to_string(&c.re),
                im: crate::num::rational_to_string(&c.im),
            })
            .collect();
        wire.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let wire = Vec::<TermWire>::deserialize(d)?;
        let mut v = RationalVector::new();
        for t in wire {
            let re = crate::num::rational_from_string(&t.re).map_err(D::Error::custom)?;
            let im = crate::num::rational_from_string(&t.im).map_err(D::Error::custom)?;
            v.add_term(t.n, &ComplexRational::new(re, im));
        }
        Ok(v)
    }
}

type GenFn = Arc<dyn Fn(u64) -> StepFn + Send + Sync>;
type ExpressFn = Arc<dyn Fn(&StepFn) -> Option<RationalVector> + Send + Sync>;
type NormFn = Arc<dyn Fn(&RationalVector, u32) -> Interval + Send + Sync>;

/// A presentation of L^p[0,1]: either white-box (generators visible as step
/// functions) or oracle-only (norms of rational vectors, nothing else).
#[derive(Clone)]
pub enum Form {
    WhiteBox {
        gen: GenFn,
        /// Optional exact inverse: express a step function as a rational
        /// vector over the generators, when one exists.
        express: Option<ExpressFn>,
    },
    Oracle { norm: NormFn },
}

#[derive(Clone)]
pub struct Presentation {
    p: Exponent,
    form: Form,
}

impl Presentation {
    pub fn new(p: Exponent, form: Form) -> Self {
        Presentation { p, form }
    }

    pub fn p(&self) -> &Exponent {
        &self.p
    }

    pub fn is_whitebox(&self) -> bool {
        matches!(self.form, Form::WhiteBox { .. })
    }

    /// The n-th generator (white-box only).
    pub fn generator(&self, n: u64) -> Result<StepFn> {
        match &self.form {
            Form::WhiteBox { gen, .. } => Ok(gen(n)),
            Form::Oracle { .. } => Err(Error::DomainShape(
                "generator access on an oracle presentation".into(),
            )),
        }
    }

    /// Evaluate a rational vector as a step function (white-box only).
    pub fn realize(&self, v: &RationalVector) -> Result<StepFn> {
        match &self.form {
            Form::WhiteBox { gen, .. } => {
                let gens: Vec<StepFn> = v.iter().map(|(n, _)| gen(*n)).collect();
                let terms: Vec<(ComplexRational, &StepFn)> = v
                    .iter()
                    .zip(&gens)
                    .map(|((_, c), g)| (c.clone(), g))
                    .collect();
                Ok(StepFn::linear_combine(&terms))
            }
            Form::Oracle { .. } => Err(Error::DomainShape(
                "realize on an oracle presentation".into(),
            )),
        }
    }

    /// Express a step function exactly over the generators, when possible.
    pub fn express(&self, f: &StepFn) -> Option<RationalVector> {
        match &self.form {
            Form::WhiteBox {
                express: Some(e), ..
            } => e(f),
            _ => None,
        }
    }

    /// Interval of width <= 2^-k containing the norm of the vector.
    pub fn norm_oracle(&self, v: &RationalVector, k: u32) -> Result<Interval> {
        if v.is_empty() {
            return Ok(Interval::zero());
        }
        match &self.form {
            Form::WhiteBox { .. } => self.realize(v)?.norm_p(&self.p, k),
            Form::Oracle { norm } => Ok(norm(v, k)),
        }
    }
}

/// Express `f` exactly as a rational combination of the given step
/// functions, when one exists: Gaussian elimination over the per-cell linear
/// system on the common breakpoint refinement.  Free variables are set to
/// zero; an inconsistent system returns None.
pub fn express_in_span(f: &StepFn, gens: &[StepFn]) -> Option<RationalVector> {
    let mut points: Vec<Rational> = f.breaks().to_vec();
    for g in gens {
        points.extend_from_slice(g.breaks());
    }
    points.sort();
    points.dedup();
    let m = gens.len();
    // one row per cell: [g_0(cell), ..., g_{m-1}(cell) | f(cell)]
    let mut rows: Vec<Vec<ComplexRational>> = Vec::new();
    for w in points.windows(2) {
        let t = &w[0];
        if t >= &Rational::one() {
            break;
        }
        let mut row: Vec<ComplexRational> = gens.iter().map(|g| g.eval(t)).collect();
        row.push(f.eval(t));
        rows.push(row);
    }
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r = 0usize;
    for col in 0..m {
        let Some(pr) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, pr);
        let inv = rows[r][col].inv();
        for c in col..=m {
            rows[r][c] = &rows[r][c] * &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][col].is_zero() {
                let factor = rows[i][col].clone();
                for c in col..=m {
                    let t = &rows[r][c] * &factor;
                    rows[i][c] = &rows[i][c] - &t;
                }
            }
        }
        pivots.push((r, col));
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    if rows.iter().skip(r).any(|row| !row[m].is_zero()) {
        return None;
    }
    let mut v = RationalVector::new();
    for (row, col) in pivots {
        let c = rows[row][m].clone();
        if !c.is_zero() {
            v.add_term(col as u64, &c);
        }
    }
    Some(v)
}

/// The dyadic cell with generator index n: level L = floor(log2(n+1)),
/// offset j = n+1-2^L, cell [j/2^L, (j+1)/2^L).
pub fn dyadic_cell(n: u64) -> DyadicSet {
    let level = 63 - (n + 1).leading_zeros() as u64;
    let j = (n + 1) - (1 << level);
    let denom = pow2(level as i64);
    let lo = Rational::from_integer(j.into()) / denom.clone();
    let hi = Rational::from_integer((j + 1).into()) / denom;
    DyadicSet::interval(lo, hi)
}

/// Inverse of `dyadic_cell` on level/offset form.
pub fn dyadic_index(level: u64, offset: u64) -> u64 {
    (1 << level) - 1 + offset
}

/// Express a step function whose breakpoints are dyadic as an exact rational
/// vector over the standard dyadic generators (all terms at one level).
fn express_dyadic(f: &StepFn) -> Option<RationalVector> {
    if f.is_zero() {
        return Some(RationalVector::new());
    }
    // find the finest level needed
    let mut level: u64 = 0;
    for b in f.breaks() {
        let mut l = 0u64;
        let mut q = b.clone();
        while !q.denom().is_one() {
            q = q * crate::num::rat_int(2);
            l += 1;
            if l > 62 {
                return None;
            }
        }
        level = level.max(l);
    }
    let mut v = RationalVector::new();
    let cells = 1u64 << level;
    let width = pow2(-(level as i64));
    for j in 0..cells {
        let t = Rational::from_integer(j.into()) * width.clone();
        let val = f.eval(&t);
        if !val.is_zero() {
            v.set(dyadic_index(level, j), val);
        }
    }
    Some(v)
}

/// The standard presentation: characteristic functions of dyadic intervals in
/// canonical order (by level, then left endpoint).
pub fn standard_dyadic(p: Exponent) -> Presentation {
    Presentation::new(
        p,
        Form::WhiteBox {
            gen: Arc::new(|n| StepFn::indicator(&dyadic_cell(n))),
            express: Some(Arc::new(express_dyadic)),
        },
    )
}

/// Exchange [0,1/2) and [1/2,1): an exact measure-preserving involution.
pub fn half_swap_set(s: &DyadicSet) -> DyadicSet {
    let half = rat(1, 2);
    let mut spans = Vec::new();
    for (lo, hi) in s.spans() {
        // split at 1/2 and translate each part
        if lo < &half {
            let cut = std::cmp::min(hi.clone(), half.clone());
            spans.push((lo + &half, &cut + &half));
        }
        if hi > &half {
            let cut = std::cmp::max(lo.clone(), half.clone());
            spans.push((&cut - &half, hi - &half));
        }
    }
    DyadicSet::from_spans(spans)
}

/// The half-swap applied to a step function (precomposition with the swap).
pub fn half_swap_fn(f: &StepFn) -> StepFn {
    let mut terms = Vec::new();
    for (lo, hi, v) in f.cells() {
        if v.is_zero() {
            continue;
        }
        let set = half_swap_set(&DyadicSet::interval(lo.clone(), hi.clone()));
        terms.push(StepFn::indicator_scaled(&set, v));
    }
    let refs: Vec<(ComplexRational, &StepFn)> = terms
        .iter()
        .map(|t| (ComplexRational::one(), t))
        .collect();
    StepFn::linear_combine(&refs)
}

/// A re-enumeration of the standard presentation with [0,1/2) and [1/2,1)
/// exchanged in every generator.
pub fn half_swapped_dyadic(p: Exponent) -> Presentation {
    Presentation::new(
        p,
        Form::WhiteBox {
            gen: Arc::new(|n| StepFn::indicator(&half_swap_set(&dyadic_cell(n)))),
            // f = sum v_n chi_swap(cell_n)  iff  swap(f) = sum v_n chi_cell_n
            express: Some(Arc::new(|f| express_dyadic(&half_swap_fn(f)))),
        },
    )
}

/// An oracle-only view of a white-box presentation (hides the generators).
pub fn as_oracle(p: &Presentation) -> Presentation {
    let inner = p.clone();
    Presentation::new(
        p.p().clone(),
        Form::Oracle {
            norm: Arc::new(move |v, k| inner.norm_oracle(v, k).expect("white-box norm")),
        },
    )
}

// --- measure rings ---

type SetFn = Arc<dyn Fn(u64) -> DyadicSet + Send + Sync>;
type IndexFn = Arc<dyn Fn(u64, u64) -> u64 + Send + Sync>;

/// A computable presentation of a measure ring: an enumeration of sets closed
/// under union and difference via computable index maps, with exact measures.
#[derive(Clone)]
pub struct MeasureRing {
    set_of: SetFn,
    union_of: IndexFn,
    diff_of: IndexFn,
}

impl MeasureRing {
    pub fn set(&self, n: u64) -> DyadicSet {
        (self.set_of)(n)
    }

    /// Index m with R(m) = R(a) u R(b).
    pub fn union_index(&self, a: u64, b: u64) -> u64 {
        (self.union_of)(a, b)
    }

    /// Index m with R(m) = R(b) - R(a).
    pub fn diff_index(&self, a: u64, b: u64) -> u64 {
        (self.diff_of)(a, b)
    }

    /// Exact measure as a point interval (the k contract is trivially met).
    pub fn measure(&self, n: u64, _k: u32) -> Interval {
        Interval::point(self.set(n).measure())
    }

    /// The ring of finite unions of dyadic intervals.  Index layout: blocks
    /// by level, block L holding all bitmasks over the 2^L level-L cells;
    /// each set is stored at its minimal level.
    pub fn dyadic() -> MeasureRing {
        MeasureRing {
            set_of: Arc::new(|n| dyadic_mask_set(dyadic_ring_decode(n))),
            union_of: Arc::new(|a, b| {
                let (la, ma) = dyadic_ring_decode(a);
                let (lb, mb) = dyadic_ring_decode(b);
                let l = la.max(lb);
                dyadic_ring_encode(l, lift_mask(ma, la, l) | lift_mask(mb, lb, l))
            }),
            diff_of: Arc::new(|a, b| {
                let (la, ma) = dyadic_ring_decode(a);
                let (lb, mb) = dyadic_ring_decode(b);
                let l = la.max(lb);
                dyadic_ring_encode(l, lift_mask(mb, lb, l) & !lift_mask(ma, la, l))
            }),
        }
    }

    /// A ring generated by finitely many explicit sets.  Indices < M are the
    /// given sets; index M + b is the union of the Boolean-algebra atoms
    /// selected by bitmask b over the 2^M cells in a fixed order.
    pub fn from_sets(sets: Vec<DyadicSet>) -> MeasureRing {
        let m = sets.len();
        assert!(m <= 16, "explicit measure rings limited to 16 base sets");
        let atoms = Arc::new(boolean_atoms(&sets));
        let sets = Arc::new(sets);
        let to_mask = {
            let sets = sets.clone();
            let atoms = atoms.clone();
            move |n: u64| -> u64 {
                if (n as usize) < sets.len() {
                    // mask of atoms contained in R(n)
                    atoms
                        .iter()
                        .enumerate()
                        .filter(|(_, a)| a.is_subset_of(&sets[n as usize]))
                        .fold(0u64, |acc, (i, _)| acc | (1 << i))
                } else {
                    n - sets.len() as u64
                }
            }
        };
        let from_mask = move |mask: u64| m as u64 + mask;
        let set_of = {
            let sets = sets.clone();
            let atoms = atoms.clone();
            Arc::new(move |n: u64| {
                if (n as usize) < sets.len() {
                    sets[n as usize].clone()
                } else {
                    let mask = n - sets.len() as u64;
                    atoms
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .fold(DyadicSet::empty(), |acc, (_, a)| acc.union(a))
                }
            })
        };
        let union_of = {
            let to_mask = to_mask.clone();
            Arc::new(move |a: u64, b: u64| from_mask(to_mask(a) | to_mask(b)))
        };
        let diff_of = Arc::new(move |a: u64, b: u64| from_mask(to_mask(b) & !to_mask(a)));
        MeasureRing {
            set_of,
            union_of,
            diff_of,
        }
    }
}

/// The nonempty cells of the Boolean algebra generated by the sets, in a
/// deterministic order (by sign pattern).
fn boolean_atoms(sets: &[DyadicSet]) -> Vec<DyadicSet> {
    let mut atoms = Vec::new();
    for h in 0u64..(1 << sets.len()) {
        let mut cell = DyadicSet::full();
        for (j, s) in sets.iter().enumerate() {
            cell = if h >> j & 1 == 1 {
                cell.intersect(s)
            } else {
                cell.difference(s)
            };
            if cell.is_empty() {
                break;
            }
        }
        if !cell.is_empty() {
            atoms.push(cell);
        }
    }
    atoms
}

/// Block offsets for the dyadic ring: block L holds 2^(2^L) masks.
fn dyadic_ring_block_start(level: u32) -> u64 {
    (0..level).map(|l| 1u64 << (1 << l)).sum()
}

fn dyadic_ring_decode(n: u64) -> (u32, u64) {
    let mut level = 0u32;
    let mut rem = n;
    loop {
        let size = if (1u64 << level) >= 64 {
            u64::MAX
        } else {
            1u64 << (1u64 << level)
        };
        if rem < size {
            return (level, rem);
        }
        rem -= size;
        level += 1;
        assert!(level <= 6, "dyadic ring index out of range");
    }
}

fn dyadic_ring_encode(level: u32, mask: u64) -> u64 {
    // reduce to the minimal level representing the same set
    let (mut level, mut mask) = (level, mask);
    while level > 0 {
        // representable one level down iff adjacent cell bits agree pairwise
        let cells = 1u64 << level;
        let mut down = 0u64;
        let mut ok = true;
        for j in 0..cells / 2 {
            let a = mask >> (2 * j) & 1;
            let b = mask >> (2 * j + 1) & 1;
            if a != b {
                ok = false;
                break;
            }
            down |= a << j;
        }
        if !ok {
            break;
        }
        level -= 1;
        mask = down;
    }
    dyadic_ring_block_start(level) + mask
}

/// Re-express a level-l mask at level l' >= l (each bit doubles per level).
fn lift_mask(mask: u64, from: u32, to: u32) -> u64 {
    let mut m = mask;
    for _ in from..to {
        let mut out = 0u64;
        let mut j = 0;
        while m >> j != 0 {
            if m >> j & 1 == 1 {
                out |= 0b11 << (2 * j);
            }
            j += 1;
        }
        m = out;
    }
    m
}

fn dyadic_mask_set((level, mask): (u32, u64)) -> DyadicSet {
    let width = pow2(-(level as i64));
    let mut spans = Vec::new();
    for j in 0..(1u64 << level) {
        if mask >> j & 1 == 1 {
            let lo = Rational::from_integer(j.into()) * width.clone();
            spans.push((lo.clone(), lo + width.clone()));
        }
    }
    DyadicSet::from_spans(spans)
}

/// Norm of sum_j coeffs[j] * chi_R(j) via the cell decomposition: cells
/// S_h = intersections of R(j) / complements over h in {0,1}^M, with
/// beta_h = sum of coefficients where h(j) = 1.
pub fn norm_via_cells(
    ring: &MeasureRing,
    coeffs: &[ComplexRational],
    p: &Exponent,
    k: u32,
) -> Result<Interval> {
    let m = coeffs.len();
    assert!(m <= 16, "cell decomposition limited to 16 sets");
    let sets: Vec<DyadicSet> = (0..m as u64).map(|n| ring.set(n)).collect();
    let mut terms: Vec<(ComplexRational, Rational)> = Vec::new();
    for h in 1u64..(1 << m) {
        let mut cell = DyadicSet::full();
        for (j, s) in sets.iter().enumerate() {
            cell = if h >> j & 1 == 1 {
                cell.intersect(s)
            } else {
                cell.difference(s)
            };
            if cell.is_empty() {
                break;
            }
        }
        if cell.is_empty() {
            continue;
        }
        let beta = (0..m)
            .filter(|j| h >> j & 1 == 1)
            .fold(ComplexRational::zero(), |acc, j| &acc + &coeffs[j]);
        if !beta.is_zero() {
            terms.push((beta, cell.measure()));
        }
    }
    if terms.is_empty() {
        return Ok(Interval::zero());
    }
    let extra = u32::BITS - (terms.len() as u32).leading_zeros();
    let mut kk = k + 2;
    loop {
        let mut total = Interval::zero();
        for (beta, mu) in &terms {
            total = total.add(&pow_abs(beta, p, kk + extra + 1).scale(mu));
        }
        let r = root(&total, p, kk)?;
        if r.width_within(k) {
            return Ok(r.round_out(k + 4));
        }
        kk += 8;
        assert!(kk < k + 4096, "cell norm refinement failed to converge");
    }
}

/// The presentation induced by a measure ring: generator n is chi_R(n), with
/// norms answered through the cell decomposition.
pub fn induced_presentation(ring: MeasureRing, p: Exponent) -> Presentation {
    let p_inner = p.clone();
    Presentation::new(
        p,
        Form::Oracle {
            norm: Arc::new(move |v, k| {
                let m = v.max_index().map_or(0, |n| n + 1) as usize;
                let coeffs: Vec<ComplexRational> = (0..m as u64).map(|n| v.get(n)).collect();
                norm_via_cells(&ring, &coeffs, &p_inner, k).expect("cell norm")
            }),
        },
    )
}

/// Nondecreasing exact lower bounds for the total measure of the union of
/// the first `count` ring sets, via the disjointification
/// F_n = R(n) - (R(0) u ... u R(n-1)).
pub fn measure_lower_bounds(ring: &MeasureRing, count: u64) -> Vec<Rational> {
    let mut bounds = Vec::with_capacity(count as usize);
    let mut seen = DyadicSet::empty();
    let mut total = Rational::zero();
    for n in 0..count {
        let f_n = ring.set(n).difference(&seen);
        total += f_n.measure();
        seen = seen.union(&f_n);
        bounds.push(total.clone());
    }
    bounds
}

// --- effective Cauchy limits ---

/// A sequence of rational vectors claimed to satisfy
/// norm(at(n) - at(n+1)) < 2^-n.
#[derive(Clone)]
pub struct CauchyVectorSeq {
    at: Arc<dyn Fn(u32) -> RationalVector + Send + Sync>,
}

impl CauchyVectorSeq {
    pub fn new(at: impl Fn(u32) -> RationalVector + Send + Sync + 'static) -> Self {
        CauchyVectorSeq { at: Arc::new(at) }
    }

    pub fn at(&self, n: u32) -> RationalVector {
        (self.at)(n)
    }
}

/// Return at(k+1), within 2^-k of the limit by the geometric tail bound.
/// Every step up to that point is re-certified through the norm oracle.
pub fn cauchy_limit(p: &Presentation, seq: &CauchyVectorSeq, k: u32) -> Result<RationalVector> {
    for n in 0..=k {
        let step = seq.at(n).sub(&seq.at(n + 1));
        let bound = p.norm_oracle(&step, n + 3)?;
        if bound.hi() >= &pow2(-(n as i64)) {
            return Err(Error::ModulusViolation {
                n,
                bound: crate::num::rational_to_string(bound.hi()),
            });
        }
    }
    Ok(seq.at(k + 1))
}

// --- JSON presentation specs ---

/// Wire schema: {"p":"3/2","kind":"stepfn","generators":[...]} or
/// {"p":"3/2","kind":"measure_ring","sets":[...]}.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PresentationSpec {
    #[serde(rename = "stepfn")]
    StepFn {
        p: String,
        generators: Vec<StepFn>,
    },
    #[serde(rename = "measure_ring")]
    MeasureRing {
        p: String,
        sets: Vec<DyadicSet>,
    },
}

impl PresentationSpec {
    pub fn build(&self) -> Result<Presentation> {
        let p_str = match self {
            PresentationSpec::StepFn { p, .. } => p,
            PresentationSpec::MeasureRing { p, .. } => p,
        };
        let q = crate::num::rational_from_string(p_str).map_err(Error::Parse)?;
        if q < Rational::one() {
            return Err(Error::Parse("exponent must be >= 1".into()));
        }
        let p = Exponent::rational(q);
        match self {
            PresentationSpec::StepFn { generators, .. } => {
                let gens = Arc::new(generators.clone());
                let gens_for_express = gens.clone();
                Ok(Presentation::new(
                    p,
                    Form::WhiteBox {
                        gen: Arc::new(move |n| {
                            gens.get(n as usize).cloned().unwrap_or_else(StepFn::zero)
                        }),
                        express: Some(Arc::new(move |f| {
                            express_in_span(f, &gens_for_express)
                        })),
                    },
                ))
            }
            PresentationSpec::MeasureRing { sets, .. } => {
                Ok(induced_presentation(MeasureRing::from_sets(sets.clone()), p))
            }
        }
    }
}

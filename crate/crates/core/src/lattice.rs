//! Simple lower semilattices of measurable sets and of vectors, the
//! remnant-based adjoining procedure, extension of partial disintegrations,
//! and success-level certification with subspace-distance witnesses.

use crate::dyadic::DyadicSet;
use crate::enclosure::Exponent;
use crate::interval::Interval;
use crate::node::{children_in, is_orchard, Node};
use crate::num::{pow2, ComplexRational, Rational};
use crate::presentation::{Presentation, RationalVector};
use crate::sigma::{is_separating_antitone_exact, NodeMap};
use crate::stepfn::StepFn;
use crate::{Error, Result};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A finite simple lower semilattice of nonempty measurable sets: any two
/// incomparable members intersect in a null set, so meets are either the
/// smaller member or the (implicit) empty set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetSemilattice {
    members: Vec<DyadicSet>,
}

impl SetSemilattice {
    pub fn new() -> Self {
        SetSemilattice {
            members: Vec::new(),
        }
    }

    /// Build from arbitrary sets, dropping empties; panics when the family is
    /// not simple.
    pub fn from_sets(sets: impl IntoIterator<Item = DyadicSet>) -> Self {
        let mut members: Vec<DyadicSet> = sets.into_iter().filter(|s| !s.is_empty()).collect();
        members.sort();
        members.dedup();
        let out = SetSemilattice { members };
        assert!(out.is_simple(), "family is not a simple semilattice");
        out
    }

    pub fn members(&self) -> &[DyadicSet] {
        &self.members
    }

    pub fn contains(&self, s: &DyadicSet) -> bool {
        self.members.contains(s)
    }

    /// Exact simplicity check: incomparable members are disjoint.
    pub fn is_simple(&self) -> bool {
        for (i, a) in self.members.iter().enumerate() {
            for b in &self.members[i + 1..] {
                let comparable = a.is_subset_of(b) || b.is_subset_of(a);
                if !comparable && !a.is_disjoint_from(b) {
                    return false;
                }
            }
        }
        true
    }

    /// True when `a` is a union of members (belongs to the generated upper
    /// semilattice).  Exact: a equals the union of its member subsets.
    pub fn generates(&self, a: &DyadicSet) -> bool {
        let mut u = DyadicSet::empty();
        for m in &self.members {
            if m.is_subset_of(a) {
                u = u.union(m);
            }
        }
        u == *a
    }

    /// The remnant of a member: the member minus the union of its strict
    /// subordinates.
    pub fn remnant(&self, y: &DyadicSet) -> DyadicSet {
        let mut u = DyadicSet::empty();
        for z in &self.members {
            if z != y && z.is_subset_of(y) {
                u = u.union(z);
            }
        }
        y.difference(&u)
    }
}

impl Default for SetSemilattice {
    fn default() -> Self {
        SetSemilattice::new()
    }
}

/// Adjoin a set: returns a simple lower semilattice extending `d` whose upper
/// semilattice contains `a`.  When `a` is already generated, `d` is returned
/// unchanged.  New members are remnant intersections and the leftover of `a`,
/// so no new member strictly contains a nonzero old member.
pub fn adjoin_set(d: &SetSemilattice, a: &DyadicSet) -> SetSemilattice {
    if d.generates(a) {
        return d.clone();
    }
    let mut out = d.members.to_vec();
    let mut union_all = DyadicSet::empty();
    for y in d.members() {
        let r = d.remnant(y).intersect(a);
        if !r.is_empty() {
            out.push(r);
        }
        union_all = union_all.union(y);
    }
    let leftover = a.difference(&union_all);
    if !leftover.is_empty() {
        out.push(leftover);
    }
    out.sort();
    out.dedup();
    let out = SetSemilattice { members: out };
    debug_assert!(out.is_simple());
    debug_assert!(out.generates(a));
    out
}

/// Exact check of all partial-disintegration invariants: finite orchard
/// domain, nonzero values, injectivity, antitone under the subvector order,
/// and incomparable nodes mapped to disjointly supported vectors.
pub fn check_partial_disintegration(phi: &NodeMap) -> Result<()> {
    if !phi.is_orchard_domain() {
        return Err(Error::DomainShape("domain is not an orchard".into()));
    }
    if phi.iter().any(|(_, f)| f.is_zero()) {
        return Err(Error::SimplicityViolation("zero value in range".into()));
    }
    let entries: Vec<_> = phi.iter().collect();
    for (i, (_, f)) in entries.iter().enumerate() {
        for (_, g) in &entries[i + 1..] {
            if f == g {
                return Err(Error::SimplicityViolation("map is not injective".into()));
            }
        }
    }
    if !is_separating_antitone_exact(phi) {
        return Err(Error::SimplicityViolation(
            "map is not separating antitone".into(),
        ));
    }
    Ok(())
}

/// True when the range of `phi` together with `f` forms a simple family:
/// incomparable pairs have meet zero.
fn simple_with(phi: &NodeMap, f: &StepFn) -> bool {
    phi.iter().all(|(_, g)| {
        f.subvector_le(g) || g.subvector_le(f) || f.meet(g).is_zero()
    })
}

/// Extend a partial disintegration by one new nonzero vector.  Precisely two
/// cases arise: when the new vector is incomparable with every old value it
/// becomes a new top-level node; when it sits below some value it becomes a
/// fresh child of the node carrying the unique minimal such value.
pub fn extend_to_orchard(phi: &NodeMap, newvec: &StepFn) -> Result<NodeMap> {
    check_partial_disintegration(phi)?;
    if newvec.is_zero() {
        return Err(Error::SimplicityViolation("new vector is zero".into()));
    }
    if phi.iter().any(|(_, g)| g == newvec) {
        return Err(Error::SimplicityViolation(
            "new vector already in range".into(),
        ));
    }
    if !simple_with(phi, newvec) {
        return Err(Error::SimplicityViolation(
            "nonzero meet with an incomparable old value".into(),
        ));
    }
    // proper extension: no old value may sit strictly below the new vector
    if phi.iter().any(|(_, g)| g.subvector_le(newvec)) {
        return Err(Error::SimplicityViolation(
            "an old value lies below the new vector".into(),
        ));
    }

    let node = if let Some(g_node) = minimal_superior(phi, newvec)? {
        // subvector case: fresh child of the node carrying the minimal value
        let domain = phi.domain();
        let next = children_in(&domain, &g_node)
            .iter()
            .map(|c| c.0[c.len() - 1] + 1)
            .max()
            .unwrap_or(0);
        g_node.child(next)
    } else {
        // incomparable case: fresh top-level node
        let next = phi
            .domain()
            .iter()
            .filter(|n| n.len() == 1)
            .map(|n| n.0[0] + 1)
            .max()
            .unwrap_or(0);
        Node::from_slice(&[next])
    };

    let mut out = phi.clone();
    out.insert(node, newvec.clone());
    check_partial_disintegration(&out)?;
    Ok(out)
}

/// The node carrying the unique minimal old value strictly above `f`, if any.
fn minimal_superior(phi: &NodeMap, f: &StepFn) -> Result<Option<Node>> {
    let supers: Vec<(&Node, &StepFn)> = phi
        .iter()
        .filter(|(_, g)| f.subvector_le(g))
        .collect();
    if supers.is_empty() {
        return Ok(None);
    }
    // superiors form a chain under the subvector order when the family is
    // simple; the minimal one has the smallest support
    let mut best = &supers[0];
    for s in &supers[1..] {
        if s.1.subvector_le(best.1) {
            best = s;
        }
    }
    for s in &supers {
        if !best.1.subvector_le(s.1) {
            return Err(Error::SimplicityViolation(
                "superiors of the new vector are not a chain".into(),
            ));
        }
    }
    Ok(Some(best.0.clone()))
}

/// The join of a simple family: each member is a subvector of the result.
fn join_of(values: &[&StepFn]) -> Result<StepFn> {
    let mut sorted: Vec<&StepFn> = values.to_vec();
    sorted.sort_by(|a, b| {
        b.support()
            .measure()
            .cmp(&a.support().measure())
            .then_with(|| a.breaks().cmp(b.breaks()))
            .then_with(|| a.vals().cmp(b.vals()))
    });
    let mut acc = StepFn::zero();
    for f in sorted {
        let fresh = f.restrict(&acc.support().complement());
        acc = acc.add(&fresh);
    }
    for f in values {
        if !f.subvector_le(&acc) {
            return Err(Error::SimplicityViolation(
                "family has no join under the subvector order".into(),
            ));
        }
    }
    Ok(acc)
}

/// Extend a partial disintegration until every target is within 2^-k of the
/// span of its range, witnessed by `dist_to_span_witness`-style coefficients.
/// Each round adjoins the next set of the dense enumeration to the support
/// semilattice and rebuilds the vector family from the global join.
pub fn extend_dense(
    phi: &NodeMap,
    targets: &[StepFn],
    p: &Exponent,
    k: u32,
    dense: impl Fn(u64) -> DyadicSet,
    budget: u64,
) -> Result<NodeMap> {
    check_partial_disintegration(phi)?;
    let mut psi = phi.clone();
    for n in 0..=budget {
        if targets
            .iter()
            .all(|t| certified_witness(t, &psi, p, k).is_some())
        {
            return Ok(psi);
        }
        if n == budget {
            break;
        }
        let r_n = dense(n);
        let values: Vec<&StepFn> = psi.iter().map(|(_, f)| f).collect();
        let supports = SetSemilattice::from_sets(values.iter().map(|f| f.support()));
        let extended = adjoin_set(&supports, &r_n);
        let h1 = join_of(&values)?;
        let h2 = StepFn::indicator(&r_n.difference(&h1.support()));
        let h = h1.add(&h2);
        let mut new_values: Vec<StepFn> = Vec::new();
        for s in extended.members() {
            let v = h.restrict(s);
            if v.is_zero() || psi.iter().any(|(_, g)| g == &v) || new_values.contains(&v) {
                continue;
            }
            new_values.push(v);
        }
        // insert larger supports first so every strict superior is present
        new_values.sort_by(|a, b| {
            b.support()
                .measure()
                .cmp(&a.support().measure())
                .then_with(|| a.breaks().cmp(b.breaks()))
                .then_with(|| a.vals().cmp(b.vals()))
        });
        for v in new_values {
            psi = extend_to_orchard(&psi, &v)?;
        }
    }
    Err(Error::BudgetExhausted(format!(
        "no span certificate for all targets within {budget} rounds"
    )))
}

/// Best-effort coefficients minimizing the residual of `target` against the
/// span of the map's values, found by per-node convex descent in the
/// remainder-vector basis.
pub fn span_coeffs(
    target: &StepFn,
    psi: &NodeMap,
    p: &Exponent,
    k: u32,
) -> BTreeMap<Node, ComplexRational> {
    let domain = psi.domain();
    let mut gamma: BTreeMap<Node, ComplexRational> = BTreeMap::new();
    // ancestors sort first, so a parent's coefficient is always available
    for node in &domain {
        let parent_gamma = node
            .parent()
            .filter(|par| domain.contains(par))
            .and_then(|par| gamma.get(&par).cloned())
            .unwrap_or_else(ComplexRational::zero);
        let nab = psi.nabla(node);
        let g = if nab.is_zero() {
            parent_gamma.clone()
        } else {
            best_scalar(target, &nab, p, k)
        };
        gamma.insert(node.clone(), g);
    }
    // convert remainder-basis coefficients to value coefficients
    let mut beta = BTreeMap::new();
    for node in &domain {
        let parent_gamma = node
            .parent()
            .filter(|par| domain.contains(par))
            .and_then(|par| gamma.get(&par).cloned())
            .unwrap_or_else(ComplexRational::zero);
        beta.insert(node.clone(), &gamma[node] - &parent_gamma);
    }
    beta
}

/// Upper bound used to compare candidate scalars during descent.
fn objective(target: &StepFn, d: &StepFn, g: &ComplexRational, p: &Exponent, k: u32) -> Rational {
    let supp = d.support();
    target
        .sub(&d.scale(g))
        .restrict(&supp)
        .norm_p_pow(p, k)
        .hi()
        .clone()
}

/// Minimize ||(target - g*d) restricted to supp(d)||_p^p over complex
/// rational g: exact candidate scalars (cell ratios and least squares), then
/// coordinate descent with dyadic steps down to 2^-(k+2).
fn best_scalar(target: &StepFn, d: &StepFn, p: &Exponent, k: u32) -> ComplexRational {
    let (t, dd) = StepFn::refine_common(target, d);
    let mut candidates = vec![ComplexRational::zero()];
    let mut num = ComplexRational::zero();
    let mut den = Rational::zero();
    for ((lo, hi, tv), (_, _, dv)) in t.cells().zip(dd.cells()) {
        if dv.is_zero() {
            continue;
        }
        let len = hi - lo;
        num = &num + &(tv * &dv.conj()).scale(&len);
        den += dv.abs_sq() * &len;
        if candidates.len() < 40 {
            let ratio = tv * &dv.inv();
            if !candidates.contains(&ratio) {
                candidates.push(ratio);
            }
        }
    }
    if !den.is_zero() {
        let ls = num.scale(&den.recip());
        if !candidates.contains(&ls) {
            candidates.push(ls);
        }
    }
    let kk = k + 6;
    let mut best = candidates[0].clone();
    let mut best_val = objective(target, d, &best, p, kk);
    for c in &candidates[1..] {
        let v = objective(target, d, c, p, kk);
        if v < best_val {
            best = c.clone();
            best_val = v;
        }
    }
    // coordinate descent on the convex objective
    let mut step = Rational::new(1.into(), 2.into());
    let floor = pow2(-((k + 2) as i64));
    while step >= floor {
        let moves = [
            ComplexRational::new(step.clone(), Rational::zero()),
            ComplexRational::new(-step.clone(), Rational::zero()),
            ComplexRational::new(Rational::zero(), step.clone()),
            ComplexRational::new(Rational::zero(), -step.clone()),
        ];
        let mut moved = false;
        for m in &moves {
            let cand = &best + m;
            let v = objective(target, d, &cand, p, kk);
            if v < best_val {
                best = cand;
                best_val = v;
                moved = true;
            }
        }
        if !moved {
            step /= Rational::from_integer(2.into());
        }
    }
    best
}

/// The residual target - sum of beta-weighted values.
pub fn span_residual(
    target: &StepFn,
    psi: &NodeMap,
    beta: &BTreeMap<Node, ComplexRational>,
) -> StepFn {
    let mut terms: Vec<(ComplexRational, &StepFn)> = vec![(ComplexRational::one(), target)];
    for (node, c) in beta {
        if let Some(f) = psi.get(node) {
            terms.push((-c, f));
        }
    }
    StepFn::linear_combine(&terms)
}

/// Search for coefficients with certified residual norm < 2^-k; the
/// certificate is the residual's enclosed norm upper bound.
fn certified_witness(
    target: &StepFn,
    psi: &NodeMap,
    p: &Exponent,
    k: u32,
) -> Option<(BTreeMap<Node, ComplexRational>, Interval)> {
    if psi.is_empty() {
        return None;
    }
    let beta = span_coeffs(target, psi, p, k);
    let res = span_residual(target, psi, &beta);
    let bound = res.norm_p(p, k + 4).ok()?;
    if bound.hi() < &pow2(-(k as i64)) {
        Some((beta, bound))
    } else {
        None
    }
}

/// Witness that the distance from a rational vector to the span of the map's
/// values is below 2^-k.  Semidecision: `None` never refutes the bound.  The
/// descent requires white-box access; oracle-only presentations always get
/// `None` here (see `dist_witness_dovetail`).
pub fn dist_to_span_witness(
    pres: &Presentation,
    v: &RationalVector,
    psi: &NodeMap,
    k: u32,
) -> Option<BTreeMap<Node, ComplexRational>> {
    if !pres.is_whitebox() {
        return None;
    }
    let target = pres.realize(v).ok()?;
    certified_witness(&target, psi, pres.p(), k).map(|(beta, _)| beta)
}

/// Complete fallback for oracle-only presentations: dovetailed enumeration of
/// rational-grid coefficients over nodes whose values have known generator
/// coordinates, certified through the norm oracle alone.  Grid round r uses
/// step 2^-r with coefficient magnitude at most 1.
pub fn dist_witness_dovetail(
    pres: &Presentation,
    v: &RationalVector,
    coords: &BTreeMap<Node, RationalVector>,
    k: u32,
    rounds: u32,
) -> Result<Option<BTreeMap<Node, ComplexRational>>> {
    let nodes: Vec<&Node> = coords.keys().collect();
    let bound = pow2(-(k as i64));
    for r in 0..=rounds {
        let step = pow2(-(r as i64));
        let half_range = 1i64 << r;
        let per_axis = (2 * half_range + 1) as u64;
        let total = per_axis.checked_pow(2 * nodes.len() as u32);
        match total {
            Some(t) if t <= 1 << 17 => {}
            _ => return Ok(None),
        }
        let mut odometer = vec![0i64; 2 * nodes.len()];
        loop {
            let mut beta = BTreeMap::new();
            let mut residual = v.clone();
            for (i, node) in nodes.iter().enumerate() {
                let re = Rational::from_integer((odometer[2 * i] - half_range).into()) * &step;
                let im = Rational::from_integer((odometer[2 * i + 1] - half_range).into()) * &step;
                let c = ComplexRational::new(re, im);
                residual = residual.sub(&coords[*node].scale(&c));
                beta.insert((*node).clone(), c);
            }
            let norm = pres.norm_oracle(&residual, k + 2)?;
            if norm.hi() < &bound {
                return Ok(Some(beta));
            }
            // advance the odometer
            let mut pos = 0;
            loop {
                if pos == odometer.len() {
                    break;
                }
                odometer[pos] += 1;
                if odometer[pos] < 2 * half_range + 1 {
                    break;
                }
                odometer[pos] = 0;
                pos += 1;
            }
            if pos == odometer.len() {
                break;
            }
        }
    }
    Ok(None)
}

/// One certified distance witness: generator index, coefficients over nodes,
/// and the enclosed residual norm.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessEntry {
    pub index: u64,
    pub beta: Vec<(Node, ComplexRational)>,
    pub residual: Interval,
}

/// A certificate that a map succeeds at a level: the first `level` generators
/// are within 2^-level of the span, and all summativity defects are below
/// 2^-level.  Verifiable independently of how it was found.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuccessCertificate {
    pub level: u32,
    pub witnesses: Vec<WitnessEntry>,
    pub defects: Vec<(Node, Interval)>,
}

/// Nonterminal nodes of the domain paired with enclosures of their
/// summativity defects (the norms of the remainder vectors).
fn defect_bounds(psi: &NodeMap, p: &Exponent, k: u32) -> Result<Vec<(Node, Interval)>> {
    let domain = psi.domain();
    let mut out = Vec::new();
    for node in &domain {
        if children_in(&domain, node).is_empty() {
            continue;
        }
        let d = psi.nabla(node).norm_p(p, k)?;
        out.push((node.clone(), d));
    }
    Ok(out)
}

/// Attempt to certify the map at a level against a white-box presentation.
pub fn success_certify(
    pres: &Presentation,
    psi: &NodeMap,
    level: u32,
) -> Result<Option<SuccessCertificate>> {
    if !is_orchard(&psi.domain()) {
        return Err(Error::DomainShape("domain is not an orchard".into()));
    }
    let p = pres.p();
    let bound = pow2(-(level as i64));
    let mut witnesses = Vec::new();
    for j in 0..u64::from(level) {
        let target = pres.realize(&RationalVector::singleton(j, ComplexRational::one()))?;
        match certified_witness(&target, psi, p, level) {
            Some((beta, residual)) => witnesses.push(WitnessEntry {
                index: j,
                beta: beta.into_iter().collect(),
                residual,
            }),
            None => return Ok(None),
        }
    }
    let defects = defect_bounds(psi, p, level + 4)?;
    if defects.iter().any(|(_, d)| d.hi() >= &bound) {
        return Ok(None);
    }
    Ok(Some(SuccessCertificate {
        level,
        witnesses,
        defects,
    }))
}

/// Re-verify a certificate from scratch: every residual and defect bound is
/// recomputed and checked strictly below 2^-level.
pub fn verify_certificate(
    pres: &Presentation,
    psi: &NodeMap,
    cert: &SuccessCertificate,
) -> Result<bool> {
    let p = pres.p();
    let bound = pow2(-(cert.level as i64));
    for j in 0..u64::from(cert.level) {
        let entry = match cert.witnesses.iter().find(|w| w.index == j) {
            Some(e) => e,
            None => return Ok(false),
        };
        let target = pres.realize(&RationalVector::singleton(j, ComplexRational::one()))?;
        let beta: BTreeMap<Node, ComplexRational> = entry.beta.iter().cloned().collect();
        if beta.keys().any(|n| !psi.contains(n)) {
            return Ok(false);
        }
        let res = span_residual(&target, psi, &beta);
        let norm = res.norm_p(p, cert.level + 4)?;
        if norm.hi() >= &bound {
            return Ok(false);
        }
    }
    for (node, _) in defect_bounds(psi, p, cert.level + 4)? {
        let d = psi.nabla(&node).norm_p(p, cert.level + 4)?;
        if d.hi() >= &bound {
            return Ok(false);
        }
    }
    Ok(true)
}

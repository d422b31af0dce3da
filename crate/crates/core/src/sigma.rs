//! The sigma disjointness functional at scalar, vector, and node-map level;
//! exact separation tests; and the repair operator that turns a
//! near-separating map into a genuinely separating antitone one.
//!
//! sigma(z,w) = |4 - 2 sqrt(2)^p|^-1 |2(|z|^p+|w|^p) - (|z-w|^p+|z+w|^p)|
//! vanishes exactly on disjointly supported pairs (p != 2), which makes it a
//! numerical test for the structural properties everything downstream needs.

use crate::enclosure::{pow_abs, pow_abs_exact, pow_interval, pow_rat, root, sigma_constant, Exponent};
use crate::interval::Interval;
use crate::node::Node;
use crate::num::{rat_int, ComplexRational, Rational};
use crate::presentation::{Presentation, RationalVector};
use crate::stepfn::StepFn;
use crate::{Error, Result};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// A finite map from nodes to step functions.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct NodeMap {
    entries: BTreeMap<Node, StepFn>,
}

impl NodeMap {
    pub fn new() -> Self {
        NodeMap::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Node, StepFn)>) -> Self {
        NodeMap {
            entries: pairs.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, node: Node, value: StepFn) {
        self.entries.insert(node, value);
    }

    pub fn get(&self, node: &Node) -> Option<&StepFn> {
        self.entries.get(node)
    }

    pub fn contains(&self, node: &Node) -> bool {
        self.entries.contains_key(node)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Node, &StepFn)> {
        self.entries.iter()
    }

    pub fn domain(&self) -> BTreeSet<Node> {
        self.entries.keys().cloned().collect()
    }

    pub fn restrict_domain(&self, nodes: &BTreeSet<Node>) -> NodeMap {
        NodeMap {
            entries: self
                .entries
                .iter()
                .filter(|(n, _)| nodes.contains(*n))
                .map(|(n, f)| (n.clone(), f.clone()))
                .collect(),
        }
    }

    /// Union preferring entries of `self` on shared nodes.
    pub fn overlay(&self, other: &NodeMap) -> NodeMap {
        let mut entries = other.entries.clone();
        entries.extend(self.entries.clone());
        NodeMap { entries }
    }

    pub fn is_orchard_domain(&self) -> bool {
        crate::node::is_orchard(&self.domain())
    }

    pub fn is_tree_domain(&self) -> bool {
        crate::node::is_tree(&self.domain())
    }

    /// The remainder vector at a node: its value minus the sum of its
    /// children's values within the domain.
    pub fn nabla(&self, node: &Node) -> StepFn {
        let value = self.get(node).expect("node outside domain");
        let children: Vec<&StepFn> = self
            .entries
            .iter()
            .filter(|(n, _)| n.len() == node.len() + 1 && node.is_prefix_of(n))
            .map(|(_, f)| f)
            .collect();
        let mut terms = vec![(ComplexRational::one(), value)];
        for c in children {
            terms.push((ComplexRational::from_int(-1), c));
        }
        StepFn::linear_combine(&terms)
    }

    /// Enclosure of the sup metric max_nu norm(self(nu) - other(nu))^p over
    /// the union of domains (missing entries count as zero).
    pub fn dist_sup_pow(&self, other: &NodeMap, p: &Exponent, k: u32) -> Interval {
        let mut nodes = self.domain();
        nodes.extend(other.domain());
        let mut best = Interval::zero();
        for n in &nodes {
            let a = self.get(n).cloned().unwrap_or_else(StepFn::zero);
            let b = other.get(n).cloned().unwrap_or_else(StepFn::zero);
            let d = a.sub(&b).norm_p_pow(p, k);
            best = interval_max(&best, &d);
        }
        best
    }
}

fn interval_max(a: &Interval, b: &Interval) -> Interval {
    Interval::new(
        std::cmp::max(a.lo().clone(), b.lo().clone()),
        std::cmp::max(a.hi().clone(), b.hi().clone()),
    )
}

#[derive(Serialize, Deserialize)]
struct NodeMapEntryWire {
    node: Vec<u32>,
    value: StepFn,
}

impl Serialize for NodeMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let wire: Vec<NodeMapEntryWire> = self
            .entries
            .iter()
            .map(|(n, f)| NodeMapEntryWire {
                node: n.0.clone(),
                value: f.clone(),
            })
            .collect();
        wire.serialize(s)
    }
}

impl<'de> Deserialize<'de> for NodeMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = Vec::<NodeMapEntryWire>::deserialize(d)?;
        Ok(NodeMap::from_pairs(
            wire.into_iter().map(|e| (Node(e.node), e.value)),
        ))
    }
}

// --- the sigma functional ---

/// The unscaled inner quantity 2|z|^p + 2|w|^p - |z+w|^p - |z-w|^p.
pub fn sigma_inner_scalar(z: &ComplexRational, w: &ComplexRational, p: &Exponent, k: u32) -> Interval {
    let kk = k + 3;
    let a = pow_abs(z, p, kk).scale(&rat_int(2));
    let b = pow_abs(w, p, kk).scale(&rat_int(2));
    let c = pow_abs(&(z + w), p, kk);
    let d = pow_abs(&(z - w), p, kk);
    a.add(&b).sub(&c).sub(&d)
}

/// sigma(z, w): interval of width <= 2^-k.
pub fn sigma_scalar(
    z: &ComplexRational,
    w: &ComplexRational,
    p: &Exponent,
    k: u32,
) -> Result<Interval> {
    p.require_not_two()?;
    let mut kk = k + 4;
    loop {
        let coef = sigma_constant(p, kk)?;
        let inner = sigma_inner_scalar(z, w, p, kk);
        let r = coef.mul(&inner.abs());
        if r.width_within(k) {
            return Ok(r.round_out(k + 4));
        }
        kk += 8;
        assert!(kk < k + 4096, "sigma refinement failed to converge");
    }
}

/// sigma(f, g) for step functions, through the norms-of-combinations form
/// (equal to the integral of the pointwise sigma).
pub fn sigma_vec(f: &StepFn, g: &StepFn, p: &Exponent, k: u32) -> Result<Interval> {
    p.require_not_two()?;
    let mut kk = k + 4;
    loop {
        let coef = sigma_constant(p, kk)?;
        let inner = sigma_vec_inner(f, g, p, kk);
        let r = coef.mul(&inner.abs());
        if r.width_within(k) {
            return Ok(r.round_out(k + 4));
        }
        kk += 8;
        assert!(kk < k + 4096, "sigma refinement failed to converge");
    }
}

fn sigma_vec_inner(f: &StepFn, g: &StepFn, p: &Exponent, kk: u32) -> Interval {
    let a = f.norm_p_pow(p, kk).scale(&rat_int(2));
    let b = g.norm_p_pow(p, kk).scale(&rat_int(2));
    let c = f.sub(g).norm_p_pow(p, kk);
    let d = f.add(g).norm_p_pow(p, kk);
    a.add(&b).sub(&c).sub(&d)
}

/// sigma of two rational vectors through a presentation's norm oracle alone:
/// only norm queries on f, g, f-g, f+g are issued.
pub fn sigma_vec_oracle(
    pres: &Presentation,
    vf: &RationalVector,
    vg: &RationalVector,
    k: u32,
) -> Result<Interval> {
    let p = pres.p().clone();
    p.require_not_two()?;
    let mut kk = k + 4;
    loop {
        let coef = sigma_constant(&p, kk)?;
        let npow = |v: &RationalVector| -> Result<Interval> {
            let n = pres.norm_oracle(v, kk)?;
            pow_interval(&n.abs(), &p, kk)
        };
        let a = npow(vf)?.scale(&rat_int(2));
        let b = npow(vg)?.scale(&rat_int(2));
        let c = npow(&vf.sub(vg))?;
        let d = npow(&vf.add(vg))?;
        let inner = a.add(&b).sub(&c).sub(&d);
        let r = coef.mul(&inner.abs());
        if r.width_within(k) {
            return Ok(r.round_out(k + 4));
        }
        kk += 8;
        assert!(kk < k + 4096, "sigma refinement failed to converge");
    }
}

/// The node pairs entering sigma(psi) and sigma-hat: unordered incomparable
/// pairs and ordered strict ancestor/descendant pairs (ancestor, descendant).
fn sigma_pairs(nodes: &BTreeSet<Node>) -> (Vec<(Node, Node)>, Vec<(Node, Node)>) {
    let v: Vec<&Node> = nodes.iter().collect();
    let mut incomparable = Vec::new();
    let mut descend = Vec::new();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i].is_proper_prefix_of(v[j]) {
                descend.push((v[i].clone(), v[j].clone()));
            } else if v[j].is_proper_prefix_of(v[i]) {
                descend.push((v[j].clone(), v[i].clone()));
            } else {
                incomparable.push((v[i].clone(), v[j].clone()));
            }
        }
    }
    (incomparable, descend)
}

/// sigma(psi) = sum over incomparable pairs of sigma(psi(nu), psi(nu')) plus
/// sum over descendant pairs of sigma(psi(nu') - psi(nu), psi(nu')).
pub fn sigma_map(psi: &NodeMap, p: &Exponent, k: u32) -> Result<Interval> {
    p.require_not_two()?;
    let (incomparable, descend) = sigma_pairs(&psi.domain());
    let m = (incomparable.len() + descend.len()).max(1) as u32;
    let extra = u32::BITS - m.leading_zeros();
    let mut kk = k + extra + 4;
    loop {
        let coef = sigma_constant(p, kk)?;
        let mut total = Interval::zero();
        for (a, b) in &incomparable {
            let inner = sigma_vec_inner(psi.get(a).unwrap(), psi.get(b).unwrap(), p, kk);
            total = total.add(&inner.abs());
        }
        for (anc, desc) in &descend {
            let diff = psi.get(desc).unwrap().sub(psi.get(anc).unwrap());
            let inner = sigma_vec_inner(&diff, psi.get(desc).unwrap(), p, kk);
            total = total.add(&inner.abs());
        }
        let r = coef.mul(&total);
        if r.width_within(k) {
            return Ok(r.round_out(k + 4));
        }
        kk += 8;
        assert!(kk < k + 4096, "sigma refinement failed to converge");
    }
}

/// Exact decision: incomparable nodes map to disjointly supported vectors and
/// descendants map to subvectors of their ancestors' values.
pub fn is_separating_antitone_exact(psi: &NodeMap) -> bool {
    let (incomparable, descend) = sigma_pairs(&psi.domain());
    incomparable.iter().all(|(a, b)| {
        psi.get(a)
            .unwrap()
            .support()
            .is_disjoint_from(&psi.get(b).unwrap().support())
    }) && descend.iter().all(|(anc, desc)| {
        psi.get(desc).unwrap().subvector_le(psi.get(anc).unwrap())
    })
}

/// 2 sigma(psi)^(1/p): an upper bound for the sup-distance to the nearest
/// separating antitone map on the same domain.
pub fn dist_bound(psi: &NodeMap, p: &Exponent, k: u32) -> Result<Interval> {
    let mut kk = k + 4;
    loop {
        let s = sigma_map(psi, p, kk)?;
        // sigma is nonnegative; clamp rounding spill below zero
        let s = Interval::new(
            std::cmp::max(Rational::zero(), s.lo().clone()),
            std::cmp::max(Rational::zero(), s.hi().clone()),
        );
        let r = root(&s, p, kk)?.scale(&rat_int(2));
        if r.width_within(k) {
            return Ok(r.round_out(k + 4));
        }
        kk += 8;
        assert!(kk < k + 4096, "distance bound refinement failed to converge");
    }
}

// --- the repair operator ---

/// The pointwise min-term integrand sigma-hat(psi0): on each cell of the
/// common refinement, a list of complex values c_i with
/// sigma-hat(t) = sum_i |c_i|^p.  The min inside each term is resolved
/// exactly by comparing |.|^2 (x -> x^(p/2) is monotone).
pub struct PointwiseSigma {
    cells: Vec<(Rational, Rational, Vec<ComplexRational>)>,
}

impl PointwiseSigma {
    /// Build from a node map, with pairs ranging over `nodes`.
    pub fn build(psi0: &NodeMap) -> PointwiseSigma {
        let (incomparable, descend) = sigma_pairs(&psi0.domain());
        // common refinement of all values involved
        let mut breaks: Vec<Rational> = vec![Rational::zero(), rat_int(1)];
        for (_, f) in psi0.iter() {
            breaks.extend(f.breaks().iter().cloned());
        }
        breaks.sort();
        breaks.dedup();
        let mut cells = Vec::with_capacity(breaks.len() - 1);
        for w in breaks.windows(2) {
            let t = &w[0];
            let mut terms = Vec::new();
            for (a, b) in &incomparable {
                let x = psi0.get(a).unwrap().eval(t);
                let y = psi0.get(b).unwrap().eval(t);
                push_min_term(&mut terms, x, y);
            }
            for (anc, desc) in &descend {
                let x = &psi0.get(desc).unwrap().eval(t) - &psi0.get(anc).unwrap().eval(t);
                let y = psi0.get(desc).unwrap().eval(t);
                push_min_term(&mut terms, x, y);
            }
            cells.push((w[0].clone(), w[1].clone(), terms));
        }
        PointwiseSigma { cells }
    }

    pub fn breaks(&self) -> Vec<Rational> {
        let mut b: Vec<Rational> = self.cells.iter().map(|(lo, _, _)| lo.clone()).collect();
        b.push(rat_int(1));
        b
    }

    /// Decide |c|^p <= sigma-hat(t) on the cell with index `idx`.
    /// Semidecision with a sound default: a certified strict ">" returns
    /// false; everything else (certified "<=", exact ties, or precision cap)
    /// returns true.  Defaulting to true only enlarges nullifiable sets,
    /// which preserves the repair invariants.
    pub fn dominates(&self, idx: usize, c: &ComplexRational, p: &Exponent) -> bool {
        let (_, _, terms) = &self.cells[idx];
        if c.is_zero() {
            return true;
        }
        let ca = c.abs_sq();
        // |c| <= |term| for some term forces |c|^p <= that term <= the sum
        if terms.iter().any(|t| ca <= t.abs_sq()) {
            return true;
        }
        if terms.is_empty() {
            return false; // |c|^p > 0 = empty sum
        }
        // exact rational path
        if let Some(lhs) = pow_abs_exact(c, p) {
            let rhs: Option<Rational> = terms
                .iter()
                .map(|t| pow_abs_exact(t, p))
                .try_fold(Rational::zero(), |acc, x| x.map(|v| acc + v));
            if let Some(rhs) = rhs {
                return lhs <= rhs;
            }
        }
        // enclosure refinement
        let extra = u32::BITS - (terms.len() as u32).leading_zeros();
        let mut k = 16;
        while k <= 128 {
            let lhs = pow_abs(c, p, k);
            let mut rhs = Interval::zero();
            for t in terms {
                rhs = rhs.add(&pow_abs(t, p, k + extra));
            }
            if lhs.hi() <= rhs.lo() {
                return true;
            }
            if lhs.lo() > rhs.hi() {
                return false;
            }
            k += 28;
        }
        true
    }
}

fn push_min_term(terms: &mut Vec<ComplexRational>, x: ComplexRational, y: ComplexRational) {
    let m = if x.abs_sq() <= y.abs_sq() { x } else { y };
    if !m.is_zero() {
        terms.push(m);
    }
}

/// The repair construction: given a partial disintegration phi on S and a
/// map psi on a finite orchard S' >= S whose new nodes all descend from S,
/// produce a separating antitone psi' with psi'|_S = phi and, for new nodes,
/// psi'(nu) = phi(source(nu)) * (1 - chi_{N_nu}) where N_nu is the
/// nullifiable set.
pub fn repair(phi: &NodeMap, psi: &NodeMap, p: &Exponent) -> Result<NodeMap> {
    let s: BTreeSet<Node> = phi.domain();
    let s_prime: BTreeSet<Node> = psi.domain();
    if !s.is_subset(&s_prime) {
        return Err(Error::DomainShape("phi's domain must lie inside psi's".into()));
    }
    if !crate::node::is_orchard(&s_prime) {
        return Err(Error::DomainShape("psi's domain is not an orchard".into()));
    }
    let delta: BTreeSet<Node> = s_prime.difference(&s).cloned().collect();
    // every new node needs an ancestor in S (its source node)
    let source_of = |nu: &Node| -> Option<Node> {
        nu.prefixes_in(&s).last()
    };
    for nu in &delta {
        if source_of(nu).is_none() {
            return Err(Error::DomainShape(format!(
                "new node {nu:?} has no ancestor in the base orchard"
            )));
        }
    }
    // psi0 = phi on S, psi on Delta
    let psi0 = phi.overlay(&psi.restrict_domain(&delta));
    let hat = PointwiseSigma::build(&psi0);
    let breaks = hat.breaks();
    // E_mu = {t : |psi(mu)(t)|^p <= sigma-hat(t)} for mu in Delta
    let mut e_sets: BTreeMap<Node, crate::dyadic::DyadicSet> = BTreeMap::new();
    for mu in &delta {
        let f = psi.get(mu).unwrap();
        let mut spans = Vec::new();
        for (idx, w) in breaks.windows(2).enumerate() {
            if hat.dominates(idx, &f.eval(&w[0]), p) {
                spans.push((w[0].clone(), w[1].clone()));
            }
        }
        e_sets.insert(mu.clone(), crate::dyadic::DyadicSet::from_spans(spans));
    }
    // N_nu = union of E_mu over mu <= nu in Delta (monotone by construction)
    let mut out = phi.clone();
    for nu in &delta {
        let mut n_set = crate::dyadic::DyadicSet::empty();
        for (mu, e) in &e_sets {
            if mu.is_prefix_of(nu) {
                n_set = n_set.union(e);
            }
        }
        let src = source_of(nu).unwrap();
        let value = phi.get(&src).unwrap().restrict(&n_set.complement());
        out.insert(nu.clone(), value);
    }
    Ok(out)
}

/// Check the repair bound as a sound interval inequality at precision k:
/// max over S' of norm(psi' - psi)^p <= max over S of norm(phi - psi)^p
/// + 2^p sigma(psi0).
pub fn repair_bound_check(
    phi: &NodeMap,
    psi: &NodeMap,
    psi_prime: &NodeMap,
    p: &Exponent,
    k: u32,
) -> Result<bool> {
    let s = phi.domain();
    let delta: BTreeSet<Node> = psi.domain().difference(&s).cloned().collect();
    let psi0 = phi.overlay(&psi.restrict_domain(&delta));
    let lhs = psi_prime.dist_sup_pow(psi, p, k);
    let base = phi.dist_sup_pow(&psi.restrict_domain(&s), p, k);
    let two_p = pow_rat(&rat_int(2), p, k);
    let s_val = sigma_map(&psi0, p, k)?;
    let rhs = base.add(&two_p.mul(&s_val));
    Ok(lhs.lo() <= rhs.hi())
}

//! Interval-valued disintegrations, the remainder-vector expansion, lifted
//! isometries along node bijections, and end-to-end isometry synthesis
//! between two presentations.

use crate::dyadic::DyadicSet;
use crate::enclosure::Exponent;
use crate::interval::Interval;
use crate::lattice::{extend_dense, span_coeffs, span_residual};
use crate::node::{is_tree, Node};
use crate::num::{pow2, ComplexRational, Rational};
use crate::presentation::{dyadic_cell, Presentation, RationalVector};
use crate::sigma::NodeMap;
use crate::stepfn::StepFn;
use crate::synth::{advance_stage, attach_root, complete_remainders, seed_stage, Strategy};
use crate::{Error, Result};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A node bijection between two disintegration domains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisintegrationIso {
    pairs: Vec<(Node, Node)>,
}

impl DisintegrationIso {
    pub fn identity(domain: impl IntoIterator<Item = Node>) -> Self {
        DisintegrationIso {
            pairs: domain.into_iter().map(|n| (n.clone(), n)).collect(),
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Node, Node)>) -> Self {
        DisintegrationIso {
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn pairs(&self) -> &[(Node, Node)] {
        &self.pairs
    }

    pub fn image(&self, n: &Node) -> Option<&Node> {
        self.pairs.iter().find(|(a, _)| a == n).map(|(_, b)| b)
    }
}

/// Map a finite-stage disintegration to interval-valued form: the root gets
/// [0,1], and each node's interval sits inside its parent's, abutting its
/// earlier siblings, with length equal to the p-th power of the node's norm
/// (exact for characteristic values, enclosure midpoint otherwise).
pub fn interval_valued(phi: &NodeMap, p: &Exponent) -> Result<(NodeMap, DisintegrationIso)> {
    let domain = phi.domain();
    if !is_tree(&domain) {
        return Err(Error::DomainShape("domain is not a tree with root".into()));
    }
    let root = phi.get(&Node::root()).unwrap();
    match root.norm_p_exact(p) {
        Some(q) if q.is_one() => {}
        Some(_) => return Err(Error::RootNorm),
        None => {
            if !root.norm_p(p, 24)?.contains(&Rational::one()) {
                return Err(Error::RootNorm);
            }
        }
    }
    let mut lengths: BTreeMap<Node, Rational> = BTreeMap::new();
    lengths.insert(Node::root(), Rational::one());
    for (node, f) in phi.iter() {
        if node.is_root() {
            continue;
        }
        let len = match f.norm_p_pow_exact(p) {
            Some(q) => q,
            None => f.norm_p_pow(p, 24).mid(),
        };
        lengths.insert(node.clone(), len);
    }
    // place intervals: ancestors first; siblings in child-index order
    let mut placed: BTreeMap<Node, (Rational, Rational)> = BTreeMap::new();
    let mut cursor: BTreeMap<Node, Rational> = BTreeMap::new();
    placed.insert(Node::root(), (Rational::zero(), Rational::one()));
    for node in &domain {
        if node.is_root() {
            continue;
        }
        let parent = node.parent().unwrap();
        let (plo, plen) = placed
            .get(&parent)
            .ok_or_else(|| Error::DomainShape(format!("missing parent of {node:?}")))?
            .clone();
        let off = cursor.get(&parent).cloned().unwrap_or_else(Rational::zero);
        let len = lengths[node].clone();
        if &off + &len > plen {
            return Err(Error::DomainShape(format!(
                "children of {parent:?} overflow the parent interval"
            )));
        }
        placed.insert(node.clone(), (&plo + &off, len.clone()));
        cursor.insert(parent, off + len);
    }
    let mut out = NodeMap::new();
    for (node, (lo, len)) in &placed {
        out.insert(
            node.clone(),
            StepFn::indicator(&DyadicSet::interval(lo.clone(), lo + len)),
        );
    }
    let iso = DisintegrationIso::identity(domain);
    Ok((out, iso))
}

/// The remainder vector of a node: its value minus the sum of its children's
/// values within the domain.
pub fn nabla(phi: &NodeMap, nu: &Node) -> StepFn {
    phi.nabla(nu)
}

/// Re-express a coefficient map over values in the remainder basis: the
/// coefficient at a node becomes the sum of the given coefficients along its
/// ancestor chain within the domain.
pub fn expand_in_nabla(
    phi: &NodeMap,
    gamma: &BTreeMap<Node, ComplexRational>,
) -> BTreeMap<Node, ComplexRational> {
    let domain = phi.domain();
    let mut out = BTreeMap::new();
    for node in &domain {
        let mut total = ComplexRational::zero();
        for mu in &domain {
            if mu.is_prefix_of(node) {
                if let Some(c) = gamma.get(mu) {
                    total = &total + c;
                }
            }
        }
        out.insert(node.clone(), total);
    }
    out
}

/// Exact check that a node bijection is an isomorphism of the two maps:
/// bijective between the domains, monotone both ways, and node-norm
/// preserving within enclosure overlap at precision k.
fn certify_iso(
    f: &DisintegrationIso,
    phi1: &NodeMap,
    phi2: &NodeMap,
    p: &Exponent,
    k: u32,
) -> Result<()> {
    let dom1 = phi1.domain();
    let dom2 = phi2.domain();
    let sources: std::collections::BTreeSet<Node> =
        f.pairs().iter().map(|(a, _)| a.clone()).collect();
    let images: std::collections::BTreeSet<Node> =
        f.pairs().iter().map(|(_, b)| b.clone()).collect();
    if sources != dom1 || images != dom2 || f.pairs().len() != dom1.len() {
        return Err(Error::IsoCertification(
            "node map is not a bijection of the domains".into(),
        ));
    }
    for (a, fa) in f.pairs() {
        for (b, fb) in f.pairs() {
            if a.is_prefix_of(b) != fa.is_prefix_of(fb) {
                return Err(Error::IsoCertification(format!(
                    "order not preserved between {a:?} and {b:?}"
                )));
            }
        }
        let n1 = phi1.get(a).unwrap().norm_p(p, k)?;
        let n2 = phi2.get(fa).unwrap().norm_p(p, k)?;
        if !n1.overlaps(&n2) {
            return Err(Error::IsoCertification(format!(
                "node norms differ at {a:?}"
            )));
        }
    }
    Ok(())
}

/// Transport coefficients along a certified isomorphism.  Norm preservation
/// of the transported combination is certified within 2 * 2^-k.
pub fn lift_apply(
    f: &DisintegrationIso,
    phi1: &NodeMap,
    phi2: &NodeMap,
    v: &BTreeMap<Node, ComplexRational>,
    p: &Exponent,
    k: u32,
) -> Result<BTreeMap<Node, ComplexRational>> {
    certify_iso(f, phi1, phi2, p, k)?;
    let mut out = BTreeMap::new();
    for (node, c) in v {
        let image = f.image(node).ok_or_else(|| {
            Error::IsoCertification(format!("coefficient at {node:?} outside the domain"))
        })?;
        out.insert(image.clone(), c.clone());
    }
    let combo1 = combine(phi1, v);
    let combo2 = combine(phi2, &out);
    let n1 = combo1.norm_p(p, k + 2)?;
    let n2 = combo2.norm_p(p, k + 2)?;
    let gap = pow2(-(k as i64)).clone() * Rational::from_integer(2.into());
    let separation = std::cmp::max(n1.lo() - n2.hi(), n2.lo() - n1.hi());
    if separation > gap {
        return Err(Error::IsoCertification(
            "transported combination is not norm preserving".into(),
        ));
    }
    Ok(out)
}

fn combine(phi: &NodeMap, v: &BTreeMap<Node, ComplexRational>) -> StepFn {
    let terms: Vec<(ComplexRational, &StepFn)> = v
        .iter()
        .filter_map(|(node, c)| phi.get(node).map(|f| (c.clone(), f)))
        .collect();
    StepFn::linear_combine(&terms)
}

/// The image of one source generator under the synthesized isometry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorImage {
    pub index: u64,
    pub vector: RationalVector,
    pub residual: Interval,
}

/// A finite-stage linear isometry between two presentations, given by the
/// images of the leading source generators with certified residual bounds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsometryData {
    pub source: String,
    pub precision: u32,
    pub images: Vec<GeneratorImage>,
}

impl IsometryData {
    /// Apply the isometry to a rational vector over the mapped generators.
    pub fn apply(&self, v: &RationalVector) -> Result<RationalVector> {
        let mut out = RationalVector::new();
        for (j, c) in v.iter() {
            let img = self
                .images
                .iter()
                .find(|g| g.index == *j)
                .ok_or_else(|| {
                    Error::IsoCertification(format!("generator {j} has no synthesized image"))
                })?;
            out = out.add(&img.vector.scale(c));
        }
        Ok(out)
    }
}

/// Build a finite-stage disintegration of a white-box presentation whose
/// span certifiably captures the first `gens` generators at 2^-(k+4), with
/// zero summativity defects and the root attached.
fn stage_tree(pres: &Presentation, k: u32, budget: u32, gens: u64) -> Result<NodeMap> {
    let p = pres.p();
    let mut stage = seed_stage(pres, 64)?;
    for lvl in 1..=budget {
        stage = advance_stage(pres, &stage, stage.k_n + 1, lvl, Strategy::Whitebox)?;
    }
    let mut targets = Vec::new();
    for j in 0..gens {
        targets.push(pres.realize(&RationalVector::singleton(j, ComplexRational::one()))?);
    }
    let rounds = 16 + 8 * (gens + u64::from(k));
    let psi = extend_dense(&stage.values, &targets, p, k + 4, dyadic_cell, rounds)?;
    let psi = complete_remainders(&psi)?;
    attach_root(&psi, p)
}

/// Synthesize a linear isometry from presentation `a` onto the span side of
/// presentation `b`: build finite-stage disintegrations of both, pass each
/// through interval-valued form, and express every leading `a`-generator as
/// a `b`-rational vector with a certified residual below 2^-k.
pub fn synthesize_isometry(
    a: &Presentation,
    b: &Presentation,
    k: u32,
    budget: u32,
) -> Result<IsometryData> {
    let (pa, pb) = (a.p(), b.p());
    pa.require_not_two()?;
    pb.require_not_two()?;
    match (pa.as_rational(), pb.as_rational()) {
        (Some(x), Some(y)) if x == y => {}
        _ => return Err(Error::ExponentMismatch),
    }
    if !a.is_whitebox() || !b.is_whitebox() {
        return Err(Error::DomainShape(
            "isometry synthesis needs white-box presentations".into(),
        ));
    }
    let p = pa;
    let gens = u64::from(budget.max(1));
    let tree_a = stage_tree(a, k, budget, gens)?;
    let tree_b = stage_tree(b, k, budget, gens)?;
    let (iv_a, _) = interval_valued(&tree_a, p)?;
    let (iv_b, _) = interval_valued(&tree_b, p)?;
    // b-generator coordinates of the b-tree values
    let mut coords_b: BTreeMap<Node, RationalVector> = BTreeMap::new();
    for (node, f) in tree_b.iter() {
        let v = b.express(f).ok_or_else(|| {
            Error::IsoCertification("target value not expressible in generators".into())
        })?;
        coords_b.insert(node.clone(), v);
    }
    let bound = pow2(-(k as i64));
    let mut images = Vec::new();
    for j in 0..gens {
        let target = a.realize(&RationalVector::singleton(j, ComplexRational::one()))?;
        // expand the generator over the a-tree and transport through the
        // interval pictures, which are exactly isometric on the spans
        let beta_a = span_coeffs(&target, &tree_a, p, k + 4);
        let res_a = span_residual(&target, &tree_a, &beta_a).norm_p(p, k + 6)?;
        let mid = combine(&iv_a, &beta_a);
        let beta_b = span_coeffs(&mid, &iv_b, p, k + 4);
        let res_b = span_residual(&mid, &iv_b, &beta_b).norm_p(p, k + 6)?;
        let residual = res_a.add(&res_b);
        if residual.hi() >= &bound {
            return Err(Error::BudgetExhausted(format!(
                "generator {j} image residual not below 2^-{k}"
            )));
        }
        let mut vector = RationalVector::new();
        for (node, c) in &beta_b {
            vector = vector.add(&coords_b[node].scale(c));
        }
        images.push(GeneratorImage {
            index: j,
            vector,
            residual,
        });
    }
    Ok(IsometryData {
        source: "source-presentation".into(),
        precision: k,
        images,
    })
}

/// One probe's certification record.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeCheck {
    pub norm_source: Interval,
    pub norm_image: Interval,
    /// Enclosure of | ||Tv|| - ||v|| |.
    pub norm_gap: Interval,
    /// Enclosure of || T(v + w) - Tv - Tw || for the next probe w.
    pub linearity: Interval,
}

/// Post-hoc verification report for a synthesized isometry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsometryReport {
    pub precision: u32,
    pub checks: Vec<ProbeCheck>,
}

/// Verify an isometry on probe vectors: bound the norm gap of every probe
/// and the linearity residual of consecutive probe pairs, all through the
/// two presentations' norm oracles.
pub fn verify_isometry(
    b: &Presentation,
    data: &IsometryData,
    a: &Presentation,
    probes: &[RationalVector],
    k: u32,
) -> Result<IsometryReport> {
    let mut checks = Vec::new();
    for (i, v) in probes.iter().enumerate() {
        let tv = data.apply(v)?;
        let norm_source = a.norm_oracle(v, k)?;
        let norm_image = b.norm_oracle(&tv, k)?;
        let norm_gap = norm_source.sub(&norm_image).abs();
        let w = &probes[(i + 1) % probes.len()];
        let lin_vec = data.apply(&v.add(w))?.sub(&tv).sub(&data.apply(w)?);
        let linearity = b.norm_oracle(&lin_vec, k)?;
        checks.push(ProbeCheck {
            norm_source,
            norm_image,
            norm_gap,
            linearity,
        });
    }
    Ok(IsometryReport {
        precision: k,
        checks,
    })
}

//! Staged synthesis of a computable disintegration from a presentation:
//! seeding from the first certifiably nonzero generator, level-by-level
//! advancement with margin radii, limits along certified chains, and root
//! attachment.

use crate::enclosure::Exponent;
use crate::interval::Interval;
use crate::lattice::{
    dist_witness_dovetail, extend_dense, extend_to_orchard, check_partial_disintegration,
    success_certify, SuccessCertificate, WitnessEntry,
};
use crate::node::{children_in, Node};
use crate::num::{pow2, ComplexRational, Rational};
use crate::presentation::{dyadic_cell, Presentation, RationalVector};
use crate::sigma::{is_separating_antitone_exact, sigma_vec_oracle, NodeMap};
use crate::stepfn::StepFn;
use crate::{Error, Result};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Search strategy for stage advancement: support-driven extension with
/// white-box access, or complete dovetailed enumeration for tiny oracle-only
/// instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Whitebox,
    Dovetail,
}

/// One stage of the synthesis: a partial disintegration certified at level
/// `n`, with margin precision `k_n` — any map within sup-distance 2^-k_n
/// keeps its values nonzero and distinct and still certifies level `n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Stage {
    pub n: u32,
    pub k_n: u32,
    /// Realized step-function values (empty for oracle-only stages).
    pub values: NodeMap,
    /// Generator coordinates of the values, where known.
    pub coords: Vec<(Node, RationalVector)>,
    pub certificate: SuccessCertificate,
}

impl Stage {
    pub fn coords_map(&self) -> BTreeMap<Node, RationalVector> {
        self.coords.iter().cloned().collect()
    }
}

/// Smallest k >= 0 with 2^-k < q; q must be positive.
fn bits_below(q: &Rational) -> u32 {
    assert!(q.is_positive(), "slack must be positive");
    let mut k = 0u32;
    while &pow2(-(k as i64)) >= q {
        k += 1;
        assert!(k < 1 << 16, "slack too small");
    }
    k
}

/// A certified positive lower bound for a step function's norm.
fn norm_lower(f: &StepFn, p: &Exponent, k0: u32) -> Result<Rational> {
    let mut k = k0;
    loop {
        let n = f.norm_p(p, k)?;
        if n.lo().is_positive() {
            return Ok(n.lo().clone());
        }
        if n.hi().is_zero() {
            return Err(Error::ZeroNorm);
        }
        k += 16;
        if k > 256 {
            return Err(Error::BudgetExhausted("norm lower bound".into()));
        }
    }
}

/// A certified positive lower bound for a rational vector's oracle norm.
fn oracle_norm_lower(pres: &Presentation, v: &RationalVector, k0: u32) -> Result<Rational> {
    let mut k = k0;
    loop {
        let n = pres.norm_oracle(v, k)?;
        if n.lo().is_positive() {
            return Ok(n.lo().clone());
        }
        if n.hi().is_zero() {
            return Err(Error::ZeroNorm);
        }
        k += 16;
        if k > 256 {
            return Err(Error::BudgetExhausted("oracle norm lower bound".into()));
        }
    }
}

/// Seed the synthesis: scan generators for one with a certifiably nonzero
/// norm and form the one-node stage with its margin radius.
pub fn seed_stage(pres: &Presentation, budget: u64) -> Result<Stage> {
    for j in 0..budget {
        let v = RationalVector::singleton(j, ComplexRational::one());
        let mut lower: Option<Rational> = None;
        for k in [4u32, 10, 16] {
            let norm = pres.norm_oracle(&v, k)?;
            if norm.lo().is_positive() {
                lower = Some(norm.lo().clone());
                break;
            }
            if norm.hi() < &pow2(-16) {
                break; // effectively zero: move to the next generator
            }
        }
        let lower = match lower {
            Some(l) => l,
            None => continue,
        };
        let node = Node::from_slice(&[0]);
        let values = if pres.is_whitebox() {
            NodeMap::from_pairs([(node.clone(), pres.realize(&v)?)])
        } else {
            NodeMap::new()
        };
        return Ok(Stage {
            n: 0,
            k_n: bits_below(&lower),
            values,
            coords: vec![(node, v)],
            certificate: SuccessCertificate {
                level: 0,
                witnesses: Vec::new(),
                defects: Vec::new(),
            },
        });
    }
    Err(Error::BudgetExhausted(format!(
        "no generator with certified nonzero norm among the first {budget}"
    )))
}

/// Margin radius for a certified white-box stage: the minimum slack over
/// value norms, pairwise value distances, witness residual slack scaled by
/// the coefficient mass, and defect slack scaled by the child counts.
fn margin_bits(pres: &Presentation, psi: &NodeMap, cert: &SuccessCertificate) -> Result<u32> {
    let p = pres.p();
    let kk = cert.level + 8;
    let mut slack: Option<Rational> = None;
    let mut upd = |q: Rational| match &slack {
        Some(s) if s <= &q => {}
        _ => slack = Some(q),
    };
    let entries: Vec<&StepFn> = psi.iter().map(|(_, f)| f).collect();
    for f in &entries {
        upd(norm_lower(f, p, kk)?);
    }
    for (i, f) in entries.iter().enumerate() {
        for g in &entries[i + 1..] {
            upd(norm_lower(&f.sub(g), p, kk)? / Rational::from_integer(2.into()));
        }
    }
    let bound = pow2(-(cert.level as i64));
    for w in &cert.witnesses {
        let mass = w
            .beta
            .iter()
            .fold(Rational::one(), |acc, (_, c)| acc + c.abs_bound());
        upd((&bound - w.residual.hi()) / mass);
    }
    let domain = psi.domain();
    for (node, d) in &cert.defects {
        let c = Rational::from_integer((children_in(&domain, node).len() as i64 + 1).into());
        upd((&bound - d.hi()) / c);
    }
    Ok(bits_below(&slack.expect("nonempty stage")))
}

/// Complete all summativity defects exactly: every nonterminal node with a
/// nonzero remainder vector gets it adjoined as an extra child.
pub(crate) fn complete_remainders(psi: &NodeMap) -> Result<NodeMap> {
    let mut out = psi.clone();
    let domain = psi.domain();
    for node in &domain {
        if children_in(&domain, node).is_empty() {
            continue;
        }
        let nab = out.nabla(node);
        if nab.is_zero() {
            continue;
        }
        out = extend_to_orchard(&out, &nab)?;
    }
    Ok(out)
}

/// Advance a stage to level `n` at chain precision `k`.  White-box stages
/// grow by support-driven extension and keep their old values exactly;
/// oracle stages grow by dovetailed candidate enumeration.
pub fn advance_stage(
    pres: &Presentation,
    stage: &Stage,
    k: u32,
    n: u32,
    strategy: Strategy,
) -> Result<Stage> {
    if k <= stage.k_n {
        return Err(Error::ChainViolation(format!(
            "requested precision {k} does not exceed the stage margin {}",
            stage.k_n
        )));
    }
    if stage.n >= n {
        return Ok(stage.clone());
    }
    match strategy {
        Strategy::Whitebox => advance_whitebox(pres, stage, k, n),
        Strategy::Dovetail => advance_dovetail(pres, stage, k, n),
    }
}

fn advance_whitebox(pres: &Presentation, stage: &Stage, k: u32, n: u32) -> Result<Stage> {
    if !pres.is_whitebox() {
        return Err(Error::DomainShape(
            "white-box strategy needs a white-box presentation".into(),
        ));
    }
    let p = pres.p();
    let mut targets = Vec::new();
    for j in 0..u64::from(n) {
        targets.push(pres.realize(&RationalVector::singleton(j, ComplexRational::one()))?);
    }
    let rounds = 16 + 8 * u64::from(n);
    let psi = extend_dense(&stage.values, &targets, p, n, dyadic_cell, rounds)?;
    let psi = complete_remainders(&psi)?;
    // the old values are untouched, so the chain step is exactly zero
    for (node, f) in stage.values.iter() {
        assert_eq!(psi.get(node), Some(f), "stage values must be preserved");
    }
    let cert = success_certify(pres, &psi, n)?.ok_or_else(|| {
        Error::BudgetExhausted(format!("no level-{n} certificate after extension"))
    })?;
    let k_next = margin_bits(pres, &psi, &cert)?
        .max(stage.k_n + 1)
        .max(k);
    let coords = psi
        .iter()
        .filter_map(|(node, f)| pres.express(f).map(|v| (node.clone(), v)))
        .collect();
    Ok(Stage {
        n,
        k_n: k_next,
        values: psi,
        coords,
        certificate: cert,
    })
}

/// Attempt a level-`level` certificate through the norm oracle alone.
fn try_certificate_oracle(
    pres: &Presentation,
    coords: &BTreeMap<Node, RationalVector>,
    level: u32,
    rounds: u32,
) -> Result<Option<SuccessCertificate>> {
    let bound = pow2(-(level as i64));
    let mut witnesses = Vec::new();
    for j in 0..u64::from(level) {
        let target = RationalVector::singleton(j, ComplexRational::one());
        let beta = match dist_witness_dovetail(pres, &target, coords, level, rounds)? {
            Some(b) => b,
            None => return Ok(None),
        };
        let mut residual = target;
        for (node, c) in &beta {
            residual = residual.sub(&coords[node].scale(c));
        }
        let norm = pres.norm_oracle(&residual, level + 4)?;
        witnesses.push(WitnessEntry {
            index: j,
            beta: beta.into_iter().collect(),
            residual: norm,
        });
    }
    let mut defects = Vec::new();
    for (node, d) in oracle_defects(pres, coords, level + 4)? {
        if d.hi() >= &bound {
            return Ok(None);
        }
        defects.push((node, d));
    }
    Ok(Some(SuccessCertificate {
        level,
        witnesses,
        defects,
    }))
}

/// Summativity defects of a coordinate map, via the norm oracle.
fn oracle_defects(
    pres: &Presentation,
    coords: &BTreeMap<Node, RationalVector>,
    k: u32,
) -> Result<Vec<(Node, Interval)>> {
    let domain: std::collections::BTreeSet<Node> = coords.keys().cloned().collect();
    let mut out = Vec::new();
    for node in &domain {
        let kids = children_in(&domain, node);
        if kids.is_empty() {
            continue;
        }
        let mut rem = coords[node].clone();
        for c in kids {
            rem = rem.sub(&coords[c]);
        }
        out.push((node.clone(), pres.norm_oracle(&rem, k)?));
    }
    Ok(out)
}

/// Re-verify a certificate against coordinate data using only the norm
/// oracle.
pub fn verify_certificate_oracle(
    pres: &Presentation,
    coords: &BTreeMap<Node, RationalVector>,
    cert: &SuccessCertificate,
) -> Result<bool> {
    let bound = pow2(-(cert.level as i64));
    for j in 0..u64::from(cert.level) {
        let entry = match cert.witnesses.iter().find(|w| w.index == j) {
            Some(e) => e,
            None => return Ok(false),
        };
        let mut residual = RationalVector::singleton(j, ComplexRational::one());
        for (node, c) in &entry.beta {
            match coords.get(node) {
                Some(v) => residual = residual.sub(&v.scale(c)),
                None => return Ok(false),
            }
        }
        if pres.norm_oracle(&residual, cert.level + 4)?.hi() >= &bound {
            return Ok(false);
        }
    }
    for (_, d) in oracle_defects(pres, coords, cert.level + 4)? {
        if d.hi() >= &bound {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Deterministic dovetailed enumeration of candidate vectors over the first
/// `gens` generators: grid rounds of complex-rational coefficients with step
/// 2^-r and magnitude at most 1.
fn candidate_vectors(gens: u64, max_round: u32) -> Vec<RationalVector> {
    let mut out = Vec::new();
    for r in 0..=max_round {
        let step = pow2(-(r as i64));
        let range = 1i64 << r;
        let axis: Vec<Rational> = (-range..=range)
            .map(|m| Rational::from_integer(m.into()) * &step)
            .collect();
        let per_gen: Vec<ComplexRational> = axis
            .iter()
            .flat_map(|re| {
                axis.iter()
                    .map(move |im| ComplexRational::new(re.clone(), im.clone()))
            })
            .collect();
        let mut odometer = vec![0usize; gens as usize];
        loop {
            let mut v = RationalVector::new();
            for (g, &idx) in odometer.iter().enumerate() {
                v.set(g as u64, per_gen[idx].clone());
            }
            if !v.is_empty() && !out.contains(&v) {
                out.push(v);
            }
            if out.len() > 4000 {
                return out;
            }
            let mut pos = 0;
            loop {
                if pos == odometer.len() {
                    return out;
                }
                odometer[pos] += 1;
                if odometer[pos] < per_gen.len() {
                    break;
                }
                odometer[pos] = 0;
                pos += 1;
            }
        }
    }
    out
}

/// Semidecision that a candidate value is compatible at a position: nonzero,
/// distinct from existing values, sigma-disjoint from incomparable ones, and
/// sigma-subordinate to its ancestors.
fn compatible_at(
    pres: &Presentation,
    coords: &BTreeMap<Node, RationalVector>,
    node: &Node,
    v: &RationalVector,
    k: u32,
) -> Result<bool> {
    if oracle_norm_lower(pres, v, k).is_err() {
        return Ok(false);
    }
    for (mu, w) in coords {
        let diff = w.sub(v);
        if pres.norm_oracle(&diff, k)?.contains_zero() {
            return Ok(false); // cannot certify distinctness
        }
        if mu.is_proper_prefix_of(node) {
            // antitone: v below w iff (w - v) and v are disjointly supported
            if !sigma_vec_oracle(pres, &diff, v, k)?.contains_zero() {
                return Ok(false);
            }
        } else if !sigma_vec_oracle(pres, w, v, k)?.contains_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Failure counts of the level-`level` conditions for a coordinate map:
/// unmet distance witnesses first, then unmet summativity defects, so fixing
/// a witness at the cost of a fresh defect still counts as progress.
fn oracle_score(
    pres: &Presentation,
    coords: &BTreeMap<Node, RationalVector>,
    level: u32,
) -> Result<(usize, usize)> {
    let bound = pow2(-(level as i64));
    let mut witness_fails = 0;
    for j in 0..u64::from(level) {
        let target = RationalVector::singleton(j, ComplexRational::one());
        if dist_witness_dovetail(pres, &target, coords, level, 2)?.is_none() {
            witness_fails += 1;
        }
    }
    let mut defect_fails = 0;
    for (_, d) in oracle_defects(pres, coords, level + 4)? {
        if d.hi() >= &bound {
            defect_fails += 1;
        }
    }
    Ok((witness_fails, defect_fails))
}

fn advance_dovetail(pres: &Presentation, stage: &Stage, k: u32, n: u32) -> Result<Stage> {
    let mut coords = stage.coords_map();
    let candidates = candidate_vectors(u64::from(n), 1);
    let max_nodes = 2 * n as usize + 4;
    loop {
        if let Some(cert) = try_certificate_oracle(pres, &coords, n, 2)? {
            let k_next = oracle_margin_bits(pres, &coords, &cert)?
                .max(stage.k_n + 1)
                .max(k);
            return Ok(Stage {
                n,
                k_n: k_next,
                values: NodeMap::new(),
                coords: coords.into_iter().collect(),
                certificate: cert,
            });
        }
        if coords.len() >= max_nodes {
            return Err(Error::BudgetExhausted(
                "dovetail node budget exhausted".into(),
            ));
        }
        let before = oracle_score(pres, &coords, n)?;
        let mut positions: Vec<Node> = Vec::new();
        let domain: std::collections::BTreeSet<Node> = coords.keys().cloned().collect();
        for node in &domain {
            let next = children_in(&domain, node)
                .iter()
                .map(|c| c.0[c.len() - 1] + 1)
                .max()
                .unwrap_or(0);
            positions.push(node.child(next));
        }
        let top = domain
            .iter()
            .filter(|m| m.len() == 1)
            .map(|m| m.0[0] + 1)
            .max()
            .unwrap_or(0);
        positions.push(Node::from_slice(&[top]));
        let mut added = false;
        'search: for v in &candidates {
            if coords.values().any(|w| w == v) {
                continue;
            }
            for pos in &positions {
                if compatible_at(pres, &coords, pos, v, n + 6)? {
                    let mut trial = coords.clone();
                    trial.insert(pos.clone(), v.clone());
                    if oracle_score(pres, &trial, n)? < before {
                        coords = trial;
                        added = true;
                        break 'search;
                    }
                }
            }
        }
        if !added {
            return Err(Error::BudgetExhausted(
                "dovetail search found no improving extension".into(),
            ));
        }
    }
}

/// Margin radius for an oracle stage, from oracle norm slacks.
fn oracle_margin_bits(
    pres: &Presentation,
    coords: &BTreeMap<Node, RationalVector>,
    cert: &SuccessCertificate,
) -> Result<u32> {
    let kk = cert.level + 8;
    let mut slack: Option<Rational> = None;
    let mut upd = |q: Rational| match &slack {
        Some(s) if s <= &q => {}
        _ => slack = Some(q),
    };
    let entries: Vec<&RationalVector> = coords.values().collect();
    for v in &entries {
        upd(oracle_norm_lower(pres, v, kk)?);
    }
    for (i, v) in entries.iter().enumerate() {
        for w in &entries[i + 1..] {
            upd(oracle_norm_lower(pres, &v.sub(w), kk)? / Rational::from_integer(2.into()));
        }
    }
    let bound = pow2(-(cert.level as i64));
    for w in &cert.witnesses {
        let mass = w
            .beta
            .iter()
            .fold(Rational::one(), |acc, (_, c)| acc + c.abs_bound());
        upd((&bound - w.residual.hi()) / mass);
    }
    let domain: std::collections::BTreeSet<Node> = coords.keys().cloned().collect();
    for (node, d) in &cert.defects {
        let c = Rational::from_integer((children_in(&domain, node).len() as i64 + 1).into());
        upd((&bound - d.hi()) / c);
    }
    Ok(bits_below(&slack.expect("nonempty stage")))
}

/// Approximate the limit disintegration at a node from a certified chain of
/// stages: verifies the chain and returns the first stage value whose margin
/// meets the requested precision, covered by the geometric tail bound.
pub fn stage_limit(stages: &[Stage], nu: &Node, p: &Exponent, k: u32) -> Result<StepFn> {
    if stages.is_empty() {
        return Err(Error::DomainShape("no stages".into()));
    }
    for w in stages.windows(2) {
        let (s, t) = (&w[0], &w[1]);
        if t.k_n <= s.k_n {
            return Err(Error::ChainViolation(
                "margin precisions must strictly increase".into(),
            ));
        }
        let step_bound = pow2(-(s.k_n as i64 + 1));
        for (node, f) in s.values.iter() {
            let g = t.values.get(node).ok_or_else(|| {
                Error::ChainViolation(format!("node {node:?} dropped between stages"))
            })?;
            let d = g.sub(f).norm_p(p, s.k_n + 6)?;
            if d.hi() >= &step_bound {
                return Err(Error::ChainViolation(format!(
                    "stage step at {node:?} not below 2^-{}",
                    s.k_n + 1
                )));
            }
        }
    }
    let mut seen = false;
    for s in stages {
        if let Some(f) = s.values.get(nu) {
            seen = true;
            // tail: sum of 2^-(k_t+1) over later stages is below 2^-k_n
            if s.k_n >= k {
                return Ok(f.clone());
            }
        }
    }
    if seen {
        Err(Error::BudgetExhausted(
            "no stage margin meets the requested precision".into(),
        ))
    } else {
        Err(Error::DomainShape("node outside all stage domains".into()))
    }
}

/// Attach the root: rescale each top-level subtree by 2^-j over the top
/// value's norm and set the root to the sum of the rescaled top values.
pub fn attach_root(phi: &NodeMap, p: &Exponent) -> Result<NodeMap> {
    check_partial_disintegration(phi)?;
    if phi.is_empty() {
        return Err(Error::DomainShape("empty orchard".into()));
    }
    let domain = phi.domain();
    let mut out = NodeMap::new();
    let mut root_terms: Vec<StepFn> = Vec::new();
    for top in domain.iter().filter(|m| m.len() == 1) {
        let j = top.0[0];
        let f = phi.get(top).unwrap();
        let norm = match f.norm_p_exact(p) {
            Some(q) => q,
            None => {
                // enclosure fallback: a rational midpoint at 2^-20
                let n = f.norm_p(p, 20)?;
                if !n.lo().is_positive() {
                    return Err(Error::ZeroNorm);
                }
                n.mid()
            }
        };
        if norm.is_zero() {
            return Err(Error::ZeroNorm);
        }
        let c = ComplexRational::from_rational(pow2(-(i64::from(j))) / norm);
        for (node, g) in phi.iter().filter(|(m, _)| top.is_prefix_of(m)) {
            out.insert(node.clone(), g.scale(&c));
        }
        root_terms.push(f.scale(&c));
    }
    let refs: Vec<(ComplexRational, &StepFn)> = root_terms
        .iter()
        .map(|f| (ComplexRational::one(), f))
        .collect();
    out.insert(Node::root(), StepFn::linear_combine(&refs));
    if !is_separating_antitone_exact(&out) {
        return Err(Error::SimplicityViolation(
            "root attachment broke the order pattern".into(),
        ));
    }
    Ok(out)
}

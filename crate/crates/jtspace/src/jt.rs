//! The James tree space `JT` on the truncated dyadic tree.
//!
//! `‖x‖² = max Σ_j (Σ_{i∈s_j} x_i)²` over finite families of pairwise
//! disjoint segments.  The family count is exponential, so the engine runs a
//! bottom-up dynamic program: at each node the value-to-go given a pending
//! open-segment sum `s` is a finite upper envelope of unit-leading-coefficient
//! parabolas `(s + a)² + c`; an open segment continues into at most one child
//! while the other child contributes its best closed value.  Two parabolas
//! with distinct shifts cross, so domination pruning reduces to keeping the
//! best offset per shift.  The DP runs on the ancestor closure of the
//! support; zeroing coordinates outside that closure is a norm-one projection
//! that fixes the pairing with any functional supported inside.
//!
//! Certificates are trimmed (segment endpoints carry nonzero coefficients,
//! zero-sum segments never appear) and deterministic: fewest segments at
//! equal value, remaining ties resolved by terminating early and preferring
//! the left child.

use std::collections::{BTreeMap, BTreeSet};

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::james::SeqVector;
use crate::rational::{rational_from_json, rational_to_json, to_f64, Rational, RationalJson};
use crate::tree::{
    children, incomparable, level, max_key, parent, precedes, Branch, NodeKey, Partition, Segment,
};

/// Default truncation depth: keys stay below 8192.
pub const DEFAULT_DEPTH: u32 = 12;

/// Hard cap on the configurable truncation depth.
pub const MAX_DEPTH: u32 = 30;

/// A finite-support map from node keys to exact rationals, bounded by a
/// truncation depth.  Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TreeVectorJson", into = "TreeVectorJson")]
pub struct TreeVector {
    depth: u32,
    entries: BTreeMap<NodeKey, Rational>,
}

#[derive(Serialize, Deserialize)]
struct TreeEntryJson {
    key: NodeKey,
    num: serde_json::Number,
    den: serde_json::Number,
}

#[derive(Serialize, Deserialize)]
struct TreeVectorJson {
    depth: u32,
    entries: Vec<TreeEntryJson>,
}

impl TryFrom<TreeVectorJson> for TreeVector {
    type Error = Error;
    fn try_from(j: TreeVectorJson) -> Result<Self> {
        let mut entries = Vec::with_capacity(j.entries.len());
        for e in j.entries {
            let r = rational_from_json(&RationalJson {
                num: e.num,
                den: e.den,
            })?;
            entries.push((e.key, r));
        }
        TreeVector::new(j.depth, entries)
    }
}

impl From<TreeVector> for TreeVectorJson {
    fn from(x: TreeVector) -> Self {
        TreeVectorJson {
            depth: x.depth,
            entries: x
                .entries
                .iter()
                .map(|(&key, v)| {
                    let q = rational_to_json(v);
                    TreeEntryJson {
                        key,
                        num: q.num,
                        den: q.den,
                    }
                })
                .collect(),
        }
    }
}

impl TreeVector {
    pub fn new(depth: u32, entries: impl IntoIterator<Item = (NodeKey, Rational)>) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::input(format!(
                "depth {depth} exceeds the configurable maximum {MAX_DEPTH}"
            )));
        }
        let bound = max_key(depth);
        let mut map = BTreeMap::new();
        for (key, v) in entries {
            if key == 0 || key > bound {
                return Err(Error::input(format!(
                    "key {key} outside the depth-{depth} tree (valid keys 1..={bound})"
                )));
            }
            if v.is_zero() {
                continue;
            }
            if map.insert(key, v).is_some() {
                return Err(Error::input(format!("duplicate key {key}")));
            }
        }
        Ok(TreeVector {
            depth,
            entries: map,
        })
    }

    pub fn zero(depth: u32) -> Self {
        TreeVector {
            depth,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_ints(depth: u32, entries: &[(NodeKey, i64)]) -> Result<Self> {
        TreeVector::new(
            depth,
            entries
                .iter()
                .map(|&(k, v)| (k, crate::rational::qi(v))),
        )
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn entries(&self) -> &BTreeMap<NodeKey, Rational> {
        &self.entries
    }

    pub fn get(&self, key: NodeKey) -> Rational {
        self.entries.get(&key).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// Minimum level over the support.
    pub fn min_level(&self) -> Option<u32> {
        self.entries.keys().map(|&k| level(k)).min()
    }

    /// Maximum level over the support.
    pub fn max_level(&self) -> Option<u32> {
        self.entries.keys().map(|&k| level(k)).max()
    }

    pub fn scale(&self, c: &Rational) -> TreeVector {
        if c.is_zero() {
            return TreeVector::zero(self.depth);
        }
        TreeVector {
            depth: self.depth,
            entries: self.entries.iter().map(|(&k, v)| (k, v * c)).collect(),
        }
    }

    pub fn add(&self, other: &TreeVector) -> Result<TreeVector> {
        let depth = self.depth.max(other.depth);
        let mut entries = self.entries.clone();
        for (&k, v) in &other.entries {
            let slot = entries.entry(k).or_insert_with(Rational::zero);
            *slot += v;
        }
        entries.retain(|_, v| !v.is_zero());
        TreeVector::new(depth, entries)
    }

    /// Coefficients outside the key interval `[lo, hi]` zeroed.  Key
    /// intervals meet every chain in a contiguous stretch, so this never
    /// increases the norm.
    pub fn restrict_keys(&self, lo: NodeKey, hi: NodeKey) -> TreeVector {
        TreeVector {
            depth: self.depth,
            entries: self
                .entries
                .range(lo..=hi)
                .map(|(&k, v)| (k, v.clone()))
                .collect(),
        }
    }

    /// Sum of coefficients over the members of a segment.
    pub fn segment_sum(&self, s: &Segment) -> Rational {
        let mut sum = Rational::zero();
        let mut k = s.bottom();
        loop {
            if let Some(v) = self.entries.get(&k) {
                sum += v;
            }
            if k == s.top() {
                break;
            }
            k /= 2;
        }
        sum
    }
}

/// Exact squared norm with its attaining partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "NormCertificateJson", into = "NormCertificateJson")]
pub struct NormCertificate {
    pub value_sq: Rational,
    pub witness: Partition,
}

#[derive(Serialize, Deserialize)]
struct NormCertificateJson {
    value_sq: RationalJson,
    /// decimal rendering of the norm itself, for human consumption
    value: f64,
    witness: Partition,
}

impl TryFrom<NormCertificateJson> for NormCertificate {
    type Error = Error;
    fn try_from(j: NormCertificateJson) -> Result<Self> {
        Ok(NormCertificate {
            value_sq: rational_from_json(&j.value_sq)?,
            witness: j.witness,
        })
    }
}

impl From<NormCertificate> for NormCertificateJson {
    fn from(c: NormCertificate) -> Self {
        NormCertificateJson {
            value: to_f64(&c.value_sq).sqrt(),
            value_sq: rational_to_json(&c.value_sq),
            witness: c.witness,
        }
    }
}

impl NormCertificate {
    pub fn norm(&self) -> f64 {
        to_f64(&self.value_sq).sqrt()
    }
}

// (value, segment count), ordered by value first, then fewest segments.
#[derive(Clone, PartialEq, Eq)]
struct Best {
    value: Rational,
    count: u32,
}

impl Best {
    fn zero() -> Self {
        Best {
            value: Rational::zero(),
            count: 0,
        }
    }

    fn lex_ge(&self, other: &Best) -> bool {
        self.value > other.value || (self.value == other.value && self.count <= other.count)
    }

    fn plus(&self, other: &Best) -> Best {
        Best {
            value: &self.value + &other.value,
            count: self.count + other.count,
        }
    }
}

// One chain option through a node: value at pending sum s is (s + shift)² +
// offset, adding `count` segments (the chain itself plus everything hanging
// off it).
#[derive(Clone)]
struct Parab {
    shift: Rational,
    offset: Rational,
    count: u32,
}

struct NodeDp {
    closed: Best,
    open: Vec<Parab>,
}

fn eval_open(parabs: &[Parab], s: &Rational) -> Best {
    debug_assert!(!parabs.is_empty());
    let mut best: Option<Best> = None;
    for p in parabs {
        let t = s + &p.shift;
        let cand = Best {
            value: &t * &t + &p.offset,
            count: p.count,
        };
        match &best {
            None => best = Some(cand),
            Some(b) => {
                if cand.value > b.value || (cand.value == b.value && cand.count < b.count) {
                    best = Some(cand);
                }
            }
        }
    }
    best.unwrap()
}

// Keep, per shift, the maximal offset (strictly higher at every s), breaking
// offset ties by fewest segments.
fn dedupe(parabs: Vec<Parab>) -> Vec<Parab> {
    let mut by_shift: BTreeMap<Rational, Parab> = BTreeMap::new();
    for p in parabs {
        match by_shift.get(&p.shift) {
            Some(q)
                if q.offset > p.offset
                    || (q.offset == p.offset && q.count <= p.count) => {}
            _ => {
                by_shift.insert(p.shift.clone(), p);
            }
        }
    }
    by_shift.into_values().collect()
}

struct Engine<'a> {
    x: &'a TreeVector,
    relevant: BTreeSet<NodeKey>,
    dp: BTreeMap<NodeKey, NodeDp>,
}

impl<'a> Engine<'a> {
    fn new(x: &'a TreeVector) -> Self {
        let mut relevant = BTreeSet::new();
        for &k in x.entries.keys() {
            let mut k = k;
            loop {
                if !relevant.insert(k) {
                    break;
                }
                match parent(k) {
                    Some(p) => k = p,
                    None => break,
                }
            }
        }
        Engine {
            x,
            relevant,
            dp: BTreeMap::new(),
        }
    }

    fn build(&mut self) {
        // children carry larger keys, so descending key order is bottom-up
        let keys: Vec<NodeKey> = self.relevant.iter().rev().copied().collect();
        for v in keys {
            let (lk, rk) = children(v);
            let xv = self.x.get(v);
            let (closed_l, open_l) = self.child_parts(lk);
            let (closed_r, open_r) = self.child_parts(rk);
            let hang = closed_l.plus(&closed_r);

            let mut open = Vec::with_capacity(1 + open_l.len() + open_r.len());
            open.push(Parab {
                shift: xv.clone(),
                offset: hang.value.clone(),
                count: 1 + hang.count,
            });
            for p in &open_l {
                open.push(Parab {
                    shift: &xv + &p.shift,
                    offset: &p.offset + &closed_r.value,
                    count: p.count + closed_r.count,
                });
            }
            for p in &open_r {
                open.push(Parab {
                    shift: &xv + &p.shift,
                    offset: &p.offset + &closed_l.value,
                    count: p.count + closed_l.count,
                });
            }
            let open = dedupe(open);

            let via_open = eval_open(&open, &Rational::zero());
            // prefer the open option on full ties: its first segment tops at
            // this node, below every key in the children's families
            let closed = if via_open.lex_ge(&hang) { via_open } else { hang };
            self.dp.insert(v, NodeDp { closed, open });
        }
    }

    fn child_parts(&self, k: NodeKey) -> (Best, Vec<Parab>) {
        match self.dp.get(&k) {
            Some(dp) => (dp.closed.clone(), dp.open.clone()),
            None => (Best::zero(), Vec::new()),
        }
    }

    fn child_closed(&self, k: NodeKey) -> Best {
        self.dp
            .get(&k)
            .map(|d| d.closed.clone())
            .unwrap_or_else(Best::zero)
    }

    fn reconstruct_closed(&self, v: NodeKey, out: &mut Vec<Segment>) {
        let Some(dp) = self.dp.get(&v) else { return };
        let (lk, rk) = children(v);
        let hang = self.child_closed(lk).plus(&self.child_closed(rk));
        let via_open = eval_open(&dp.open, &Rational::zero());
        if via_open.lex_ge(&hang) {
            self.reconstruct_open(v, Rational::zero(), v, out);
        } else {
            self.reconstruct_closed(lk, out);
            self.reconstruct_closed(rk, out);
        }
    }

    fn reconstruct_open(&self, v: NodeKey, s: Rational, top: NodeKey, out: &mut Vec<Segment>) {
        let (lk, rk) = children(v);
        let s1 = s + self.x.get(v);
        let closed_l = self.child_closed(lk);
        let closed_r = self.child_closed(rk);

        let terminate = Best {
            value: &s1 * &s1 + &closed_l.value + &closed_r.value,
            count: 1 + closed_l.count + closed_r.count,
        };
        let go_left = self.dp.get(&lk).map(|d| {
            let b = eval_open(&d.open, &s1);
            Best {
                value: b.value + &closed_r.value,
                count: b.count + closed_r.count,
            }
        });
        let go_right = self.dp.get(&rk).map(|d| {
            let b = eval_open(&d.open, &s1);
            Best {
                value: b.value + &closed_l.value,
                count: b.count + closed_l.count,
            }
        });

        let mut choice = 0u8;
        let mut best = terminate;
        if let Some(b) = go_left {
            if !best.lex_ge(&b) {
                best = b;
                choice = 1;
            }
        }
        if let Some(b) = go_right {
            if !best.lex_ge(&b) {
                best = b;
                choice = 2;
            }
        }
        match choice {
            0 => {
                out.push(Segment::new(top, v).expect("top precedes v along the walk"));
                self.reconstruct_closed(lk, out);
                self.reconstruct_closed(rk, out);
            }
            1 => {
                self.reconstruct_closed(rk, out);
                self.reconstruct_open(lk, s1, top, out);
            }
            _ => {
                self.reconstruct_closed(lk, out);
                self.reconstruct_open(rk, s1, top, out);
            }
        }
    }
}

/// Exact maximum of `Σ (segment sum)²` over families of pairwise disjoint
/// segments, with an attaining trimmed family.
pub fn jt_norm_sq(x: &TreeVector) -> NormCertificate {
    if x.is_zero() {
        return NormCertificate {
            value_sq: Rational::zero(),
            witness: Partition::empty(),
        };
    }
    let mut engine = Engine::new(x);
    engine.build();
    let root = engine.dp.get(&1).expect("nonzero vector has a relevant root");
    let value_sq = root.closed.value.clone();

    let mut segments = Vec::with_capacity(root.closed.count as usize);
    engine.reconstruct_closed(1, &mut segments);

    // trim: endpoints must carry nonzero coefficients
    let trimmed: Vec<Segment> = segments
        .iter()
        .map(|s| {
            let members: Vec<NodeKey> = s
                .keys()
                .into_iter()
                .filter(|k| x.entries.contains_key(k))
                .collect();
            let (&t, &b) = (
                members.first().expect("witness segments meet the support"),
                members.last().expect("witness segments meet the support"),
            );
            Segment::new(t, b).expect("support members along one chain")
        })
        .collect();
    let witness = Partition::new(trimmed).expect("trimmed witness stays pairwise disjoint");
    debug_assert_eq!(
        p_norm_sq(x, &witness).expect("witness within depth"),
        value_sq
    );
    NormCertificate { value_sq, witness }
}

/// Partition seminorm squared `Σ_j (Σ_{i∈s_j} x_i)²`; a lower bound for the
/// squared norm for every partition.
pub fn p_norm_sq(x: &TreeVector, p: &Partition) -> Result<Rational> {
    let bound = max_key(x.depth());
    let mut total = Rational::zero();
    for s in p.segments() {
        if s.bottom() > bound {
            return Err(Error::input(format!(
                "segment ({}, {}) exceeds the depth-{} tree",
                s.top(),
                s.bottom(),
                x.depth()
            )));
        }
        let sum = x.segment_sum(s);
        total += &sum * &sum;
    }
    Ok(total)
}

/// A subset of the tree on which restriction is a norm-one projection:
/// a union of full subtrees and of chains (final segments), admissible when
/// the path between any two comparable members stays inside the set —
/// equivalently, every segment meets the set in a segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RestrictionComponent {
    #[serde(rename = "subtree")]
    Subtree { root: NodeKey },
    #[serde(rename = "chain")]
    Chain { segment: Segment },
}

impl RestrictionComponent {
    fn top(&self) -> NodeKey {
        match self {
            RestrictionComponent::Subtree { root } => *root,
            RestrictionComponent::Chain { segment } => segment.top(),
        }
    }

    fn contains(&self, key: NodeKey) -> bool {
        match self {
            RestrictionComponent::Subtree { root } => precedes(*root, key),
            RestrictionComponent::Chain { segment } => segment.contains(key),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RestrictionSetJson", into = "RestrictionSetJson")]
pub struct RestrictionSet {
    components: Vec<RestrictionComponent>,
    depth: u32,
}

#[derive(Serialize, Deserialize)]
struct RestrictionSetJson {
    depth: u32,
    components: Vec<RestrictionComponent>,
}

impl TryFrom<RestrictionSetJson> for RestrictionSet {
    type Error = Error;
    fn try_from(j: RestrictionSetJson) -> Result<Self> {
        RestrictionSet::new(j.depth, j.components)
    }
}

impl From<RestrictionSet> for RestrictionSetJson {
    fn from(r: RestrictionSet) -> Self {
        RestrictionSetJson {
            depth: r.depth,
            components: r.components,
        }
    }
}

/// Depth up to which arbitrary component unions are validated exhaustively.
pub const EXHAUSTIVE_ADMISSIBILITY_DEPTH: u32 = 3;

impl RestrictionSet {
    /// Builds and validates a restriction set.
    ///
    /// Components are canonicalized (nested pieces dropped, chains merged
    /// end-to-end).  Admissibility holds by construction when the remaining
    /// component tops are pairwise incomparable; other unions are accepted
    /// only at depth ≤ [`EXHAUSTIVE_ADMISSIBILITY_DEPTH`] after an exhaustive
    /// check, and rejections carry a witnessing segment.
    pub fn new(depth: u32, components: Vec<RestrictionComponent>) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::input(format!("depth {depth} exceeds {MAX_DEPTH}")));
        }
        let bound = max_key(depth);
        for c in &components {
            let (top, bottom) = match c {
                RestrictionComponent::Subtree { root } => (*root, *root),
                RestrictionComponent::Chain { segment } => (segment.top(), segment.bottom()),
            };
            if top < 1 || bottom > bound {
                return Err(Error::input(format!(
                    "component at key {top} exceeds the depth-{depth} tree"
                )));
            }
        }

        let mut comps = components;
        comps.sort_by_key(|c| (c.top(), matches!(c, RestrictionComponent::Chain { .. })));
        comps.dedup();

        // drop pieces contained in another component
        let mut kept: Vec<RestrictionComponent> = Vec::new();
        'outer: for c in comps {
            for k in &kept {
                if component_subsumes(k, &c) {
                    continue 'outer;
                }
            }
            kept.retain(|k| !component_subsumes(&c, k));
            kept.push(c);
        }
        kept.sort_by_key(|c| c.top());

        // merge chains that continue each other
        let mut merged: Vec<RestrictionComponent> = Vec::new();
        for c in kept {
            if let (
                Some(RestrictionComponent::Chain { segment: last }),
                RestrictionComponent::Chain { segment: next },
            ) = (merged.last_mut(), &c)
            {
                if parent(next.top()) == Some(last.bottom()) {
                    *last = Segment::new(last.top(), next.bottom()).expect("chains connect");
                    continue;
                }
            }
            merged.push(c);
        }

        let set = RestrictionSet {
            components: merged,
            depth,
        };
        let tops_incomparable = set.components.iter().enumerate().all(|(i, a)| {
            set.components[i + 1..]
                .iter()
                .all(|b| incomparable(a.top(), b.top()))
        });
        if tops_incomparable {
            return Ok(set);
        }
        if depth <= EXHAUSTIVE_ADMISSIBILITY_DEPTH {
            set.check_admissible_exhaustively()?;
            return Ok(set);
        }
        let (a, b) = set
            .components
            .iter()
            .enumerate()
            .find_map(|(i, a)| {
                set.components[i + 1..]
                    .iter()
                    .find(|b| !incomparable(a.top(), b.top()))
                    .map(|b| (a.top(), b.top()))
            })
            .expect("a comparable pair exists");
        let (u, w) = if precedes(a, b) { (a, b) } else { (b, a) };
        Err(Error::input(format!(
            "components with comparable tops need the exhaustive admissibility check \
             (depth ≤ {EXHAUSTIVE_ADMISSIBILITY_DEPTH}): segment ({u}, {w}) may leave the set"
        )))
    }

    pub fn subtrees(depth: u32, roots: Vec<NodeKey>) -> Result<Self> {
        RestrictionSet::new(
            depth,
            roots
                .into_iter()
                .map(|root| RestrictionComponent::Subtree { root })
                .collect(),
        )
    }

    pub fn final_segments(depth: u32, chains: Vec<Segment>) -> Result<Self> {
        RestrictionSet::new(
            depth,
            chains
                .into_iter()
                .map(|segment| RestrictionComponent::Chain { segment })
                .collect(),
        )
    }

    pub fn whole_tree(depth: u32) -> Self {
        RestrictionSet {
            components: vec![RestrictionComponent::Subtree { root: 1 }],
            depth,
        }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn components(&self) -> &[RestrictionComponent] {
        &self.components
    }

    pub fn contains(&self, key: NodeKey) -> bool {
        self.components.iter().any(|c| c.contains(key))
    }

    fn check_admissible_exhaustively(&self) -> Result<()> {
        let members: Vec<NodeKey> = (1..=max_key(self.depth))
            .filter(|&k| self.contains(k))
            .collect();
        for (i, &u) in members.iter().enumerate() {
            for &w in &members[i + 1..] {
                if !precedes(u, w) {
                    continue;
                }
                let mut k = w;
                while k != u {
                    if !self.contains(k) {
                        return Err(Error::input(format!(
                            "not admissible: segment ({u}, {w}) leaves the set at key {k}"
                        )));
                    }
                    k /= 2;
                }
            }
        }
        Ok(())
    }
}

fn component_subsumes(outer: &RestrictionComponent, inner: &RestrictionComponent) -> bool {
    match (outer, inner) {
        (RestrictionComponent::Subtree { root }, _) => precedes(*root, inner.top()),
        (
            RestrictionComponent::Chain { segment: o },
            RestrictionComponent::Chain { segment: i },
        ) => o.contains(i.top()) && o.contains(i.bottom()),
        _ => false,
    }
}

/// Zeroes every coefficient outside `a`.  For admissible `a` this is the
/// norm-one projection `P_A`, so the norm never increases.
pub fn restrict(x: &TreeVector, a: &RestrictionSet) -> TreeVector {
    TreeVector {
        depth: x.depth,
        entries: x
            .entries
            .iter()
            .filter(|(&k, _)| a.contains(k))
            .map(|(&k, v)| (k, v.clone()))
            .collect(),
    }
}

/// The coefficients of `x` along a branch, as a 1-indexed sequence in
/// root-to-leaf order.  The `J` norm of the result equals the `JT` norm of
/// `x`: on one chain the two suprema range over the same families.
pub fn chain_coefficients(x: &TreeVector, b: &Branch) -> Result<SeqVector> {
    for &k in x.entries.keys() {
        if !b.contains(k) {
            return Err(Error::input(format!(
                "key {k} is not on branch {:?}",
                b.bits_string()
            )));
        }
    }
    SeqVector::new(
        x.entries
            .iter()
            .map(|(&k, v)| (level(k) as u64 + 1, v.clone())),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::james::j_norm_sq;
    use crate::oracle;
    use crate::rational::{q, qi};
    use proptest::prelude::*;

    fn seg(t: NodeKey, b: NodeKey) -> Segment {
        Segment::new(t, b).unwrap()
    }

    fn tv(entries: &[(NodeKey, i64)]) -> TreeVector {
        TreeVector::from_ints(4, entries).unwrap()
    }

    #[test]
    fn norm_examples() {
        let r = jt_norm_sq(&tv(&[(2, 1), (3, 1)]));
        assert_eq!(r.value_sq, qi(2));
        assert_eq!(r.witness.segments(), &[seg(2, 2), seg(3, 3)]);

        let r = jt_norm_sq(&tv(&[(1, 1), (2, 1)]));
        assert_eq!(r.value_sq, qi(4));
        assert_eq!(r.witness.segments(), &[seg(1, 2)]);

        let r = jt_norm_sq(&tv(&[(1, 1), (2, 1), (3, 1)]));
        assert_eq!(r.value_sq, qi(5));
        assert_eq!(r.witness.segments(), &[seg(1, 2), seg(3, 3)]);

        let r = jt_norm_sq(&TreeVector::zero(4));
        assert_eq!(r.value_sq, qi(0));
        assert!(r.witness.is_empty());
    }

    #[test]
    fn p_norm_examples() {
        let x = tv(&[(1, 1), (2, 1), (3, 1)]);
        let p = Partition::new(vec![seg(1, 1), seg(2, 2), seg(3, 3)]).unwrap();
        assert_eq!(p_norm_sq(&x, &p).unwrap(), qi(3));
        let p = Partition::new(vec![seg(1, 2), seg(3, 3)]).unwrap();
        assert_eq!(p_norm_sq(&x, &p).unwrap(), qi(5));
        assert_eq!(p_norm_sq(&x, &Partition::empty()).unwrap(), qi(0));
    }

    #[test]
    fn restrict_examples() {
        let x = tv(&[(1, 1), (2, 1)]);
        let a = RestrictionSet::subtrees(4, vec![2]).unwrap();
        let y = restrict(&x, &a);
        assert_eq!(y, tv(&[(2, 1)]));
        assert_eq!(jt_norm_sq(&x).value_sq, qi(4));
        assert_eq!(jt_norm_sq(&y).value_sq, qi(1));

        let x = tv(&[(2, 1), (3, 1)]);
        assert_eq!(restrict(&x, &a), tv(&[(2, 1)]));

        let a = RestrictionSet::whole_tree(4);
        assert_eq!(restrict(&x, &a), x);
    }

    #[test]
    fn chain_coefficient_examples() {
        let x = tv(&[(1, 1), (2, 1)]);
        let b = Branch::from_bits("0").unwrap();
        let s = chain_coefficients(&x, &b).unwrap();
        assert_eq!(s, SeqVector::from_ints(&[(1, 1), (2, 1)]));
        assert_eq!(j_norm_sq(&s).value_sq, qi(4));

        let x = tv(&[(1, 1), (3, -1)]);
        let b = Branch::from_bits("1").unwrap();
        let s = chain_coefficients(&x, &b).unwrap();
        assert_eq!(s, SeqVector::from_ints(&[(1, 1), (2, -1)]));
        assert_eq!(j_norm_sq(&s).value_sq, qi(2));

        let empty = chain_coefficients(&TreeVector::zero(4), &b).unwrap();
        assert!(empty.is_zero());

        // off-branch support is an input error
        let x = tv(&[(2, 1)]);
        assert!(chain_coefficients(&x, &b).is_err());
    }

    #[test]
    fn depth_bound_refuses_out_of_range_keys() {
        assert!(TreeVector::from_ints(2, &[(8, 1)]).is_err());
        assert!(TreeVector::from_ints(2, &[(7, 1)]).is_ok());
    }

    #[test]
    fn certificate_is_sound_and_trimmed() {
        let x = TreeVector::new(
            4,
            [
                (1u64, q(1, 2)),
                (4, q(-3, 4)),
                (9, qi(2)),
                (13, q(1, 8)),
                (26, qi(-1)),
            ],
        )
        .unwrap();
        let r = jt_norm_sq(&x);
        assert_eq!(p_norm_sq(&x, &r.witness).unwrap(), r.value_sq);
        for s in r.witness.segments() {
            assert!(x.entries().contains_key(&s.top()));
            assert!(x.entries().contains_key(&s.bottom()));
            assert!(!x.segment_sum(s).is_zero());
        }
    }

    #[test]
    fn oracle_equivalence_exhaustive_depth1() {
        // all vectors on the 3-node tree with entries in {−1, 0, 1}
        for a in -1i64..=1 {
            for b in -1i64..=1 {
                for c in -1i64..=1 {
                    let x = TreeVector::from_ints(1, &[(1, a), (2, b), (3, c)]).unwrap();
                    let fast = jt_norm_sq(&x);
                    let brute = oracle::jt_norm_sq_brute(&x, 1).unwrap();
                    assert_eq!(fast.value_sq, brute, "mismatch on ({a}, {b}, {c})");
                    assert_eq!(p_norm_sq(&x, &fast.witness).unwrap(), fast.value_sq);
                }
            }
        }
    }

    #[test]
    fn restriction_set_canonicalization() {
        // nested subtree dropped
        let a = RestrictionSet::subtrees(4, vec![2, 4]).unwrap();
        assert_eq!(a.components().len(), 1);
        // continuing chains merge
        let a = RestrictionSet::final_segments(4, vec![seg(1, 2), seg(4, 8)]).unwrap();
        assert_eq!(
            a.components(),
            &[RestrictionComponent::Chain {
                segment: seg(1, 8)
            }]
        );
    }

    #[test]
    fn restriction_set_rejects_inadmissible() {
        // {2} ∪ subtree(8): the path 2 → 4 → 8 leaves the set at 4
        let err = RestrictionSet::new(
            3,
            vec![
                RestrictionComponent::Chain {
                    segment: seg(2, 2),
                },
                RestrictionComponent::Subtree { root: 8 },
            ],
        );
        assert!(err.is_err());
        // the same shape is accepted when the chain reaches the subtree
        let ok = RestrictionSet::new(
            3,
            vec![
                RestrictionComponent::Chain {
                    segment: seg(2, 4),
                },
                RestrictionComponent::Subtree { root: 8 },
            ],
        );
        assert!(ok.is_ok());
        // beyond the exhaustive depth, comparable tops are refused
        let err = RestrictionSet::new(
            6,
            vec![
                RestrictionComponent::Chain {
                    segment: seg(2, 4),
                },
                RestrictionComponent::Subtree { root: 8 },
            ],
        );
        assert!(err.is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn oracle_equivalence_depth2_random(entries in proptest::collection::vec((1u64..=7, -2i64..=2, 1i64..=4), 0..8)) {
            let mut map: BTreeMap<NodeKey, Rational> = BTreeMap::new();
            for (k, n, d) in entries {
                map.insert(k, q(n, d));
            }
            map.retain(|_, v| !v.is_zero());
            let x = TreeVector::new(2, map).unwrap();
            let fast = jt_norm_sq(&x);
            prop_assert_eq!(fast.value_sq.clone(), oracle::jt_norm_sq_brute(&x, 2).unwrap());
            prop_assert_eq!(p_norm_sq(&x, &fast.witness).unwrap(), fast.value_sq);
        }

        #[test]
        fn branch_isometry_random(bits in proptest::collection::vec(any::<bool>(), 0..12), coeffs in proptest::collection::vec((-3i64..=3, 1i64..=4), 1..13)) {
            let bit_string: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
            let branch = Branch::from_bits(&bit_string).unwrap();
            let keys = branch.keys();
            let entries: Vec<(NodeKey, Rational)> = keys
                .iter()
                .zip(&coeffs)
                .map(|(&k, &(n, d))| (k, q(n, d)))
                .collect();
            let x = TreeVector::new(DEFAULT_DEPTH, entries).unwrap();
            let chain = chain_coefficients(&x, &branch).unwrap();
            prop_assert_eq!(jt_norm_sq(&x).value_sq, j_norm_sq(&chain).value_sq);
        }

        #[test]
        fn key_interval_bimonotone(entries in proptest::collection::vec((1u64..=31, -2i64..=2), 0..8), lo in 1u64..=31, len in 0u64..=31) {
            let x = TreeVector::from_ints(4, &entries.iter().map(|&(k, v)| (k, v)).collect::<Vec<_>>());
            prop_assume!(x.is_ok());
            let x = x.unwrap();
            let y = x.restrict_keys(lo, lo.saturating_add(len));
            prop_assert!(jt_norm_sq(&y).value_sq <= jt_norm_sq(&x).value_sq);
        }
    }
}

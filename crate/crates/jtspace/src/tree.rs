//! The dyadic tree: heap-keyed nodes, segments, branches and partitions.
//!
//! Keys are the canonical node identity everywhere: the node at level `n`,
//! index `i` is the key `2^n + i`, children of `k` are `2k` and `2k + 1`, and
//! the tree order `⪯` ("is an ancestor of") is compatible with the integer
//! order on keys.  `(level, index)` pairs appear only at the API boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeKey = u64;

/// Highest level representable without key overflow.
pub const MAX_LEVEL: u32 = 62;

/// Key of the node at `(level, index)`, i.e. `2^level + index`.
pub fn node_key(level: u32, index: u64) -> Result<NodeKey> {
    if level > MAX_LEVEL {
        return Err(Error::input(format!("level {level} exceeds {MAX_LEVEL}")));
    }
    let width = 1u64 << level;
    if index >= width {
        return Err(Error::input(format!(
            "index {index} out of range for level {level} (must be < {width})"
        )));
    }
    Ok(width + index)
}

/// Level (height) of a key: `floor(log2(key))`.
pub fn level(key: NodeKey) -> u32 {
    debug_assert!(key >= 1);
    63 - key.leading_zeros()
}

/// Index of a key within its level.
pub fn index_in_level(key: NodeKey) -> u64 {
    key - (1u64 << level(key))
}

pub fn parent(key: NodeKey) -> Option<NodeKey> {
    if key > 1 {
        Some(key / 2)
    } else {
        None
    }
}

pub fn children(key: NodeKey) -> (NodeKey, NodeKey) {
    (2 * key, 2 * key + 1)
}

/// Tree order: `a ⪯ b`, i.e. `a` is an ancestor of `b` or equal to it.
/// Computed by halving `b` until it reaches `a`'s level.
pub fn precedes(a: NodeKey, b: NodeKey) -> bool {
    debug_assert!(a >= 1 && b >= 1);
    let mut b = b;
    while b > a {
        b /= 2;
    }
    b == a
}

pub fn incomparable(a: NodeKey, b: NodeKey) -> bool {
    !precedes(a, b) && !precedes(b, a)
}

/// Deepest common ancestor of two keys.
pub fn meet(a: NodeKey, b: NodeKey) -> NodeKey {
    let (mut a, mut b) = (a, b);
    while a != b {
        if a > b {
            a /= 2;
        } else {
            b /= 2;
        }
    }
    a
}

/// Number of keys in the complete tree of the given depth (levels `0..=depth`).
pub fn tree_size(depth: u32) -> u64 {
    (1u64 << (depth + 1)) - 1
}

/// Largest key of the complete tree of the given depth.
pub fn max_key(depth: u32) -> NodeKey {
    tree_size(depth)
}

/// A downward chain in the tree, stored as its `(top, bottom)` key pair.
///
/// The member set is the unique path `{top, …, parent(bottom), bottom}`;
/// equivalently all keys `v` with `top ⪯ v ⪯ bottom`.  The empty segment is
/// not representable; operations that may produce one return `Option`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "SegmentJson", into = "SegmentJson")]
pub struct Segment {
    top: NodeKey,
    bottom: NodeKey,
}

#[derive(Serialize, Deserialize)]
struct SegmentJson {
    top: NodeKey,
    bottom: NodeKey,
}

impl TryFrom<SegmentJson> for Segment {
    type Error = Error;
    fn try_from(j: SegmentJson) -> Result<Self> {
        Segment::new(j.top, j.bottom)
    }
}

impl From<Segment> for SegmentJson {
    fn from(s: Segment) -> Self {
        SegmentJson {
            top: s.top,
            bottom: s.bottom,
        }
    }
}

impl Segment {
    pub fn new(top: NodeKey, bottom: NodeKey) -> Result<Self> {
        if top < 1 {
            return Err(Error::input("segment keys must be ≥ 1"));
        }
        if !precedes(top, bottom) {
            return Err(Error::input(format!(
                "({top}, {bottom}) is not a segment: {top} does not precede {bottom}"
            )));
        }
        Ok(Segment { top, bottom })
    }

    pub fn node(key: NodeKey) -> Self {
        debug_assert!(key >= 1);
        Segment {
            top: key,
            bottom: key,
        }
    }

    pub fn top(&self) -> NodeKey {
        self.top
    }

    pub fn bottom(&self) -> NodeKey {
        self.bottom
    }

    /// Number of member keys.
    pub fn len(&self) -> u32 {
        level(self.bottom) - level(self.top) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, key: NodeKey) -> bool {
        key >= 1 && precedes(self.top, key) && precedes(key, self.bottom)
    }

    /// Member keys in root-to-leaf order.
    pub fn keys(&self) -> Vec<NodeKey> {
        let mut out = Vec::with_capacity(self.len() as usize);
        let mut k = self.bottom;
        loop {
            out.push(k);
            if k == self.top {
                break;
            }
            k /= 2;
        }
        out.reverse();
        out
    }

    /// Restriction to the key interval `[lo, hi]`.  Always a segment (or
    /// empty): the tree order is compatible with the integer order, so the
    /// members inside a key interval form a contiguous stretch of the chain.
    pub fn restrict(&self, lo: NodeKey, hi: NodeKey) -> Option<Segment> {
        let mut new_top = None;
        let mut new_bottom = None;
        for k in self.keys() {
            if k >= lo && k <= hi {
                if new_top.is_none() {
                    new_top = Some(k);
                }
                new_bottom = Some(k);
            }
        }
        match (new_top, new_bottom) {
            (Some(t), Some(b)) => Some(Segment { top: t, bottom: b }),
            _ => None,
        }
    }

    /// Whether the member sets intersect.  Two chains meet iff their tops are
    /// comparable and the deeper top lies on the shallower chain.
    pub fn intersects(&self, other: &Segment) -> bool {
        if precedes(self.top, other.top) {
            precedes(other.top, self.bottom)
        } else if precedes(other.top, self.top) {
            precedes(self.top, other.bottom)
        } else {
            false
        }
    }
}

/// A finite branch prefix: left/right choices from the root.
///
/// The induced key sequence is `k₀ = 1`, `k_{j+1} = 2k_j + bit_j`, a
/// root-initiated segment of length `depth + 1`.  Infinite branches are out of
/// scope; results that depend on a branch always carry the truncation depth.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BranchJson", into = "BranchJson")]
pub struct Branch {
    bits: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct BranchJson {
    bits: String,
}

impl TryFrom<BranchJson> for Branch {
    type Error = Error;
    fn try_from(j: BranchJson) -> Result<Self> {
        Branch::from_bits(&j.bits)
    }
}

impl From<Branch> for BranchJson {
    fn from(b: Branch) -> Self {
        BranchJson { bits: b.bits_string() }
    }
}

impl Branch {
    /// Parses a string of `0` (left) and `1` (right) choices.
    pub fn from_bits(bits: &str) -> Result<Self> {
        let mut v = Vec::with_capacity(bits.len());
        for c in bits.chars() {
            match c {
                '0' => v.push(false),
                '1' => v.push(true),
                _ => {
                    return Err(Error::input(format!(
                        "branch bits must be 0 or 1, got {c:?}"
                    )))
                }
            }
        }
        if v.len() > MAX_LEVEL as usize {
            return Err(Error::input(format!(
                "branch depth {} exceeds {MAX_LEVEL}",
                v.len()
            )));
        }
        Ok(Branch { bits: v })
    }

    pub fn root() -> Self {
        Branch { bits: Vec::new() }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Number of bits; the branch visits levels `0..=depth()`.
    pub fn depth(&self) -> u32 {
        self.bits.len() as u32
    }

    /// Key of the node at the given level along the branch.
    pub fn key_at(&self, lvl: u32) -> NodeKey {
        debug_assert!(lvl <= self.depth());
        let mut k = 1u64;
        for &b in &self.bits[..lvl as usize] {
            k = 2 * k + b as u64;
        }
        k
    }

    /// All keys on the branch in root-to-leaf order.
    pub fn keys(&self) -> Vec<NodeKey> {
        let mut out = Vec::with_capacity(self.bits.len() + 1);
        let mut k = 1u64;
        out.push(k);
        for &b in &self.bits {
            k = 2 * k + b as u64;
            out.push(k);
        }
        out
    }

    pub fn last_key(&self) -> NodeKey {
        self.key_at(self.depth())
    }

    pub fn contains(&self, key: NodeKey) -> bool {
        level(key) <= self.depth() && self.key_at(level(key)) == key
    }

    /// The whole branch prefix as a segment.
    pub fn as_segment(&self) -> Segment {
        Segment {
            top: 1,
            bottom: self.last_key(),
        }
    }

    /// The final segment of branch nodes with keys `> m`, if any.
    pub fn tail_after(&self, m: NodeKey) -> Option<Segment> {
        self.as_segment().restrict(m + 1, NodeKey::MAX)
    }

    /// Length of the longest common bit prefix with another branch.
    pub fn common_prefix_len(&self, other: &Branch) -> u32 {
        self.bits
            .iter()
            .zip(&other.bits)
            .take_while(|(a, b)| a == b)
            .count() as u32
    }
}

/// Smallest key `m` such that the final segments of all branches beyond `m`
/// are pairwise incomparable: the maximum key at which two branches still
/// agree.  Errors if two branches coincide as bit strings or if one is a
/// prefix of another so that no tail separates them.
pub fn incomparable_tail_depth(branches: &[Branch]) -> Result<NodeKey> {
    let mut m: NodeKey = 0;
    for (i, a) in branches.iter().enumerate() {
        for b in &branches[i + 1..] {
            if a.bits == b.bits {
                return Err(Error::input(format!(
                    "duplicate branch {:?}",
                    a.bits_string()
                )));
            }
            let p = a.common_prefix_len(b);
            if p == a.depth() || p == b.depth() {
                return Err(Error::input(format!(
                    "branch {:?} is a prefix of {:?}: tails never separate",
                    a.bits_string(),
                    b.bits_string()
                )));
            }
            m = m.max(a.key_at(p));
        }
    }
    // Every branch must still have a node beyond m.
    for b in branches {
        if b.last_key() <= m {
            return Err(Error::input(format!(
                "branch {:?} too short to separate beyond key {m}",
                b.bits_string()
            )));
        }
    }
    Ok(m)
}

/// A finite family of pairwise disjoint segments in canonical
/// `(top, bottom)` order.  Doubles as a norm certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PartitionJson", into = "PartitionJson")]
pub struct Partition {
    segments: Vec<Segment>,
}

#[derive(Serialize, Deserialize)]
struct PartitionJson {
    segments: Vec<Segment>,
}

impl TryFrom<PartitionJson> for Partition {
    type Error = Error;
    fn try_from(j: PartitionJson) -> Result<Self> {
        Partition::new(j.segments)
    }
}

impl From<Partition> for PartitionJson {
    fn from(p: Partition) -> Self {
        PartitionJson {
            segments: p.segments,
        }
    }
}

impl Partition {
    /// Validates disjointness and sorts canonically.
    pub fn new(mut segments: Vec<Segment>) -> Result<Self> {
        segments.sort();
        segments.dedup();
        for (i, a) in segments.iter().enumerate() {
            for b in &segments[i + 1..] {
                if a.intersects(b) {
                    return Err(Error::input(format!(
                        "segments ({}, {}) and ({}, {}) overlap",
                        a.top(),
                        a.bottom(),
                        b.top(),
                        b.bottom()
                    )));
                }
            }
        }
        Ok(Partition { segments })
    }

    pub fn empty() -> Self {
        Partition {
            segments: Vec::new(),
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// All segments of the complete tree of the given depth, canonically ordered.
pub fn enumerate_segments(depth: u32) -> Vec<Segment> {
    let mut out = Vec::new();
    let max = max_key(depth);
    for top in 1..=max {
        // descendants of `top` within the depth bound, in key order
        let mut stack = vec![top];
        let mut descendants = Vec::new();
        while let Some(k) = stack.pop() {
            descendants.push(k);
            let (l, r) = children(k);
            if l <= max {
                stack.push(l);
            }
            if r <= max {
                stack.push(r);
            }
        }
        descendants.sort_unstable();
        for bottom in descendants {
            out.push(Segment { top, bottom });
        }
    }
    out.sort();
    out
}

/// Depth cap for exhaustive partition enumeration.
pub const ENUMERATION_DEPTH_CAP: u32 = 3;

/// Number of nonempty families of pairwise disjoint segments in the complete
/// tree of the given depth, by an independent two-state recursion: `closed(v)`
/// counts families inside the subtree at `v` (empty included), `open(v)`
/// counts configurations with one segment still running through `v`.
pub fn count_partitions(depth: u32) -> u128 {
    fn rec(lvl: u32, depth: u32) -> (u128, u128) {
        if lvl == depth {
            return (2, 1);
        }
        let (c, o) = rec(lvl + 1, depth);
        let open = c * c + 2 * o * c;
        (c * c + open, open)
    }
    rec(0, depth).0 - 1
}

/// Visits every nonempty family of pairwise disjoint segments exactly once,
/// in lexicographic order of segment index sets.
pub fn for_each_partition<F: FnMut(&[Segment])>(depth: u32, mut f: F) -> Result<()> {
    if depth > ENUMERATION_DEPTH_CAP {
        return Err(Error::EnumerationTooLarge {
            depth,
            estimate: count_partitions(depth),
        });
    }
    let segments = enumerate_segments(depth);
    let n = segments.len();
    // compatibility[i][j]: segments i and j are disjoint
    let mut compatible = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            compatible[i][j] = i != j && !segments[i].intersects(&segments[j]);
        }
    }
    let mut chosen: Vec<usize> = Vec::new();
    let mut family: Vec<Segment> = Vec::new();
    fn rec<F: FnMut(&[Segment])>(
        start: usize,
        segments: &[Segment],
        compatible: &[Vec<bool>],
        chosen: &mut Vec<usize>,
        family: &mut Vec<Segment>,
        f: &mut F,
    ) {
        for i in start..segments.len() {
            if chosen.iter().all(|&j| compatible[j][i]) {
                chosen.push(i);
                family.push(segments[i]);
                f(family);
                rec(i + 1, segments, compatible, chosen, family, f);
                chosen.pop();
                family.pop();
            }
        }
    }
    rec(0, &segments, &compatible, &mut chosen, &mut family, &mut f);
    Ok(())
}

/// All nonempty partitions of the complete tree of the given depth.
/// Refuses depths beyond [`ENUMERATION_DEPTH_CAP`] with a size estimate.
pub fn enumerate_partitions(depth: u32) -> Result<Vec<Partition>> {
    let mut out = Vec::new();
    for_each_partition(depth, |family| {
        out.push(Partition {
            segments: family.to_vec(),
        });
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn node_key_examples() {
        assert_eq!(node_key(0, 0).unwrap(), 1);
        assert_eq!(node_key(1, 1).unwrap(), 3);
        assert_eq!(node_key(3, 5).unwrap(), 13);
        assert!(node_key(3, 8).is_err());
    }

    #[test]
    fn precedes_examples() {
        assert!(precedes(1, 7));
        assert!(!precedes(2, 3));
        assert!(precedes(3, 13)); // 13 → 6 → 3
        assert!(precedes(5, 5));
    }

    #[test]
    fn parent_child_relations() {
        for k in 1..256u64 {
            let (l, r) = children(k);
            assert_eq!(parent(l), Some(k));
            assert_eq!(parent(r), Some(k));
            assert_eq!(level(l), level(k) + 1);
        }
        assert_eq!(parent(1), None);
    }

    #[test]
    fn segment_restrict_examples() {
        let s = Segment::new(1, 13).unwrap();
        assert_eq!(s.keys(), vec![1, 3, 6, 13]);
        assert_eq!(s.restrict(3, 7), Some(Segment::new(3, 6).unwrap()));
        assert_eq!(Segment::node(2).restrict(5, 9), None);
        let s = Segment::new(1, 4).unwrap();
        assert_eq!(s.restrict(1, 100), Some(s));
    }

    #[test]
    fn incomparable_tail_examples() {
        let b = |s: &str| Branch::from_bits(s).unwrap();
        assert_eq!(incomparable_tail_depth(&[b("00"), b("01")]).unwrap(), 2);
        assert_eq!(incomparable_tail_depth(&[b("0"), b("1")]).unwrap(), 1);
        assert_eq!(
            incomparable_tail_depth(&[b("000"), b("001"), b("01")]).unwrap(),
            4
        );
        assert!(incomparable_tail_depth(&[b("01"), b("01")]).is_err());
        assert!(incomparable_tail_depth(&[b("0"), b("00")]).is_err());
    }

    #[test]
    fn tails_after_cut_are_incomparable() {
        let b = |s: &str| Branch::from_bits(s).unwrap();
        let branches = [b("000"), b("001"), b("010"), b("110")];
        let m = incomparable_tail_depth(&branches).unwrap();
        let tails: Vec<Segment> = branches
            .iter()
            .map(|br| br.tail_after(m).unwrap())
            .collect();
        for (i, s) in tails.iter().enumerate() {
            for t in &tails[i + 1..] {
                assert!(incomparable(s.top(), t.top()));
            }
        }
    }

    #[test]
    fn partition_enumeration_small_counts() {
        assert_eq!(enumerate_partitions(0).unwrap().len(), 1);
        let p1 = enumerate_partitions(1).unwrap();
        assert_eq!(p1.len(), 11);
        assert_eq!(enumerate_segments(1).len(), 5);
        assert_eq!(count_partitions(1), 11);
        for p in &p1 {
            // revalidation must succeed: already canonical and disjoint
            assert_eq!(Partition::new(p.segments().to_vec()).unwrap(), *p);
        }
    }

    #[test]
    fn partition_enumeration_matches_recursive_count() {
        for depth in 0..=2 {
            let mut n = 0u128;
            for_each_partition(depth, |_| n += 1).unwrap();
            assert_eq!(n, count_partitions(depth));
        }
    }

    #[test]
    fn enumeration_refuses_large_depth() {
        match enumerate_partitions(4) {
            Err(Error::EnumerationTooLarge { estimate, .. }) => {
                assert_eq!(estimate, count_partitions(4));
            }
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn partition_rejects_overlap() {
        let s1 = Segment::new(1, 2).unwrap();
        let s2 = Segment::new(2, 4).unwrap();
        assert!(Partition::new(vec![s1, s2]).is_err());
    }

    proptest! {
        #[test]
        fn precedes_implies_key_order(a in 1u64..2048, b in 1u64..2048) {
            if precedes(a, b) {
                prop_assert!(a <= b);
            }
        }

        #[test]
        fn restrict_output_is_valid_segment(
            top in 1u64..64,
            down in 0u32..5,
            walk in 0u64..32,
            lo in 1u64..2048,
            len in 0u64..2048,
        ) {
            let mut bottom = top;
            let mut w = walk;
            for _ in 0..down {
                bottom = 2 * bottom + (w & 1);
                w >>= 1;
            }
            let s = Segment::new(top, bottom).unwrap();
            let hi = lo.saturating_add(len);
            if let Some(r) = s.restrict(lo, hi) {
                prop_assert!(precedes(r.top(), r.bottom()));
                prop_assert!(r.top() >= lo && r.bottom() <= hi);
                // member set is exactly the filtered chain
                let expect: Vec<_> =
                    s.keys().into_iter().filter(|&k| k >= lo && k <= hi).collect();
                prop_assert_eq!(r.keys(), expect);
            } else {
                prop_assert!(s.keys().iter().all(|&k| k < lo || k > hi));
            }
        }

        #[test]
        fn meet_is_common_ancestor(a in 1u64..4096, b in 1u64..4096) {
            let m = meet(a, b);
            prop_assert!(precedes(m, a) && precedes(m, b));
            // children of the meet no longer dominate both
            let (l, r) = children(m);
            prop_assert!(!(precedes(l, a) && precedes(l, b)));
            prop_assert!(!(precedes(r, a) && precedes(r, b)));
        }
    }
}

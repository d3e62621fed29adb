//! Functionals on `JT` and the dual norm on finite-support elements of `JT*`.
//!
//! Every segment `s` induces the norm-one functional `s*(x) = Σ_{n∈s} x(n)`,
//! and the combinations `Σ λ_i s_i*` with `Σ λ_i² ≤ 1` over pairwise disjoint
//! segments form a norming set for `JT`: the dual unit ball is their closed
//! convex hull.  The dual norm of a finite-support functional is therefore
//! the maximum of the pairing over the primal unit ball, and that is computed
//! here by a cutting-plane iteration:
//!
//! - the master problem maximizes the linear pairing over the box `|x_k| ≤ 1`
//!   (singleton segments bound every coordinate) and the accumulated cuts;
//! - the exact `JT` engine is the separation oracle: a candidate with norm
//!   `t > 1` yields a norming partition, and the partition seminorm
//!   linearized at the scaled boundary point is a violated supporting
//!   hyperplane whose coefficients form an exact element of the norming set;
//! - scaled oracle points are feasible, so the pairing at them drives a
//!   certified lower bound while the master optimum drives the upper bound.
//!
//! The master runs in floating point; the final witness is re-verified by the
//! exact rational engine.  The search space is the ancestor closure of the
//! functional's support: zeroing the remaining coordinates is a norm-one
//! projection which fixes the pairing.

use std::collections::BTreeMap;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jt::{jt_norm_sq, TreeVector, MAX_DEPTH};
use crate::rational::{
    dyadic_from_f64, rational_from_json, rational_to_json, sqrt_upper, to_f64, Rational,
    RationalJson,
};
use crate::simplex::ColumnLp;
use crate::tree::{level, max_key, parent, NodeKey, Partition, Segment};

/// A finite-support coefficient map representing `Σ c_t e_t*`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DualVectorJson", into = "DualVectorJson")]
pub struct DualVector {
    depth: u32,
    entries: BTreeMap<NodeKey, Rational>,
}

#[derive(Serialize, Deserialize)]
struct DualEntryJson {
    key: NodeKey,
    num: serde_json::Number,
    den: serde_json::Number,
}

#[derive(Serialize, Deserialize)]
struct DualVectorJson {
    depth: u32,
    entries: Vec<DualEntryJson>,
}

impl TryFrom<DualVectorJson> for DualVector {
    type Error = Error;
    fn try_from(j: DualVectorJson) -> Result<Self> {
        let mut entries = Vec::with_capacity(j.entries.len());
        for e in j.entries {
            let r = rational_from_json(&RationalJson {
                num: e.num,
                den: e.den,
            })?;
            entries.push((e.key, r));
        }
        DualVector::new(j.depth, entries)
    }
}

impl From<DualVector> for DualVectorJson {
    fn from(f: DualVector) -> Self {
        DualVectorJson {
            depth: f.depth,
            entries: f
                .entries
                .iter()
                .map(|(&key, v)| {
                    let q = rational_to_json(v);
                    DualEntryJson {
                        key,
                        num: q.num,
                        den: q.den,
                    }
                })
                .collect(),
        }
    }
}

impl DualVector {
    pub fn new(depth: u32, entries: impl IntoIterator<Item = (NodeKey, Rational)>) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::input(format!("depth {depth} exceeds {MAX_DEPTH}")));
        }
        let bound = max_key(depth);
        let mut map = BTreeMap::new();
        for (key, v) in entries {
            if key == 0 || key > bound {
                return Err(Error::input(format!(
                    "key {key} outside the depth-{depth} tree"
                )));
            }
            if v.is_zero() {
                continue;
            }
            if map.insert(key, v).is_some() {
                return Err(Error::input(format!("duplicate key {key}")));
            }
        }
        Ok(DualVector {
            depth,
            entries: map,
        })
    }

    pub fn zero(depth: u32) -> Self {
        DualVector {
            depth,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_ints(depth: u32, entries: &[(NodeKey, i64)]) -> Result<Self> {
        DualVector::new(
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

    pub fn add(&self, other: &DualVector) -> Result<DualVector> {
        let depth = self.depth.max(other.depth);
        let mut entries = self.entries.clone();
        for (&k, v) in &other.entries {
            let slot = entries.entry(k).or_insert_with(Rational::zero);
            *slot += v;
        }
        entries.retain(|_, v| !v.is_zero());
        DualVector::new(depth, entries)
    }

    pub fn scale(&self, c: &Rational) -> DualVector {
        if c.is_zero() {
            return DualVector::zero(self.depth);
        }
        DualVector {
            depth: self.depth,
            entries: self.entries.iter().map(|(&k, v)| (k, v * c)).collect(),
        }
    }

    pub fn min_level(&self) -> Option<u32> {
        self.entries.keys().map(|&k| level(k)).min()
    }

    pub fn max_level(&self) -> Option<u32> {
        self.entries.keys().map(|&k| level(k)).max()
    }
}

/// The functional of a segment: coefficient 1 on every member.
pub fn segment_functional(s: &Segment) -> DualVector {
    let depth = level(s.bottom());
    DualVector {
        depth,
        entries: s.keys().into_iter().map(|k| (k, Rational::one())).collect(),
    }
}

/// `⟨f, x⟩ = Σ f(k)·x(k)` over the common support.
pub fn pairing(f: &DualVector, x: &TreeVector) -> Rational {
    let mut sum = Rational::zero();
    for (k, v) in &f.entries {
        if let Some(w) = x.entries().get(k) {
            sum += v * w;
        }
    }
    sum
}

/// An element `Σ λ_i s_i*` of the norming set: `Σ λ_i² ≤ 1` over pairwise
/// disjoint segments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WElement {
    pub terms: Vec<(RationalJson, Segment)>,
}

impl WElement {
    pub fn new(terms: Vec<(Rational, Segment)>) -> Self {
        WElement {
            terms: terms
                .into_iter()
                .map(|(l, s)| (rational_to_json(&l), s))
                .collect(),
        }
    }

    pub fn terms(&self) -> Result<Vec<(Rational, Segment)>> {
        self.terms
            .iter()
            .map(|(l, s)| Ok((rational_from_json(l)?, *s)))
            .collect()
    }

    /// The induced functional `Σ λ_i s_i*`.
    pub fn to_dual(&self) -> Result<DualVector> {
        let terms = self.terms()?;
        let depth = terms
            .iter()
            .map(|(_, s)| level(s.bottom()))
            .max()
            .unwrap_or(0);
        let mut f = DualVector::zero(depth);
        for (l, s) in terms {
            f = f.add(&segment_functional(&s).scale(&l))?;
        }
        Ok(f)
    }
}

/// True iff `Σ λ_i² ≤ 1` exactly and the segments are pairwise disjoint;
/// such elements lie in the dual unit ball.
pub fn w_element_check(w: &WElement) -> bool {
    let Ok(terms) = w.terms() else { return false };
    let mut sum = Rational::zero();
    for (l, _) in &terms {
        sum += l * l;
    }
    if sum > Rational::one() {
        return false;
    }
    for (i, (_, s)) in terms.iter().enumerate() {
        for (_, t) in &terms[i + 1..] {
            if s.intersects(t) {
                return false;
            }
        }
    }
    true
}

/// Certified output of the dual-norm computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DualResultJson", into = "DualResultJson")]
pub struct DualResult {
    /// Midpoint of the final bracket; within `tolerance` of the supremum of
    /// the pairing over the truncated unit ball.
    pub value: f64,
    pub tolerance: f64,
    pub iterations: usize,
    /// Certified lower bound: the pairing at the witness.
    pub lower: f64,
    /// Certified upper bound from the master relaxation.
    pub upper: f64,
    /// Feasible primal point: `jt_norm(witness) ≤ 1` re-checked exactly.
    pub witness: TreeVector,
    /// Per-iteration `(lower, upper)` trail; monotone and bracketing.
    pub bounds_history: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct DualResultJson {
    value: f64,
    tolerance: f64,
    iterations: usize,
    lower: f64,
    upper: f64,
    witness: TreeVector,
}

impl TryFrom<DualResultJson> for DualResult {
    type Error = Error;
    fn try_from(j: DualResultJson) -> Result<Self> {
        Ok(DualResult {
            value: j.value,
            tolerance: j.tolerance,
            iterations: j.iterations,
            lower: j.lower,
            upper: j.upper,
            witness: j.witness,
            bounds_history: Vec::new(),
        })
    }
}

impl From<DualResult> for DualResultJson {
    fn from(r: DualResult) -> Self {
        DualResultJson {
            value: r.value,
            tolerance: r.tolerance,
            iterations: r.iterations,
            lower: r.lower,
            upper: r.upper,
            witness: r.witness,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DualOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Cuts re-linearized from previously seen partitions per iteration.
    pub pool_cuts_per_iteration: usize,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions {
            tol: 1e-6,
            max_iterations: 10_000,
            pool_cuts_per_iteration: 4,
        }
    }
}

/// Dual norm of `f` within absolute tolerance `tol`, with a feasible witness.
/// Deterministic for fixed input and tolerance.  Fails loudly with both
/// bounds if the iteration cap is hit.
pub fn jtstar_norm(f: &DualVector, tol: f64) -> Result<DualResult> {
    jtstar_norm_with(
        f,
        &DualOptions {
            tol,
            ..DualOptions::default()
        },
    )
}

struct CutContext {
    vars: Vec<NodeKey>,
    index: BTreeMap<NodeKey, usize>,
    depth: u32,
}

impl CutContext {
    fn new(f: &DualVector) -> Self {
        let mut vars = std::collections::BTreeSet::new();
        for &k in f.entries.keys() {
            let mut k = k;
            loop {
                if !vars.insert(k) {
                    break;
                }
                match parent(k) {
                    Some(p) => k = p,
                    None => break,
                }
            }
        }
        let vars: Vec<NodeKey> = vars.into_iter().collect();
        let index = vars.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let depth = vars.iter().map(|&k| level(k)).max().unwrap_or(0);
        CutContext { vars, index, depth }
    }

    fn vector_from(&self, coords: &[Rational]) -> TreeVector {
        TreeVector::new(
            self.depth,
            self.vars
                .iter()
                .zip(coords)
                .map(|(&k, v)| (k, v.clone())),
        )
        .expect("closure keys are within depth")
    }

    /// Supporting-hyperplane cut of `p_norm(·, partition) ≤ 1` at `y / r`
    /// where `r ≥ p_norm(y)`: coefficients `σ_s(y)/r` per segment, an exact
    /// element of the norming set, accumulated per coordinate.
    fn linearize(&self, partition: &Partition, y: &TreeVector) -> Option<Vec<f64>> {
        let mut sums = Vec::with_capacity(partition.len());
        let mut total = Rational::zero();
        for s in partition.segments() {
            let sum = y.segment_sum(s);
            total += &sum * &sum;
            sums.push(sum);
        }
        if total <= Rational::one() {
            return None;
        }
        let r = sqrt_upper(&total, 3);
        let mut g = vec![0.0; self.vars.len()];
        for (s, sum) in partition.segments().iter().zip(&sums) {
            let w = to_f64(&(sum / &r));
            for k in s.keys() {
                if let Some(&i) = self.index.get(&k) {
                    g[i] += w;
                }
            }
        }
        Some(g)
    }
}

pub fn jtstar_norm_with(f: &DualVector, opts: &DualOptions) -> Result<DualResult> {
    if f.is_zero() {
        return Ok(DualResult {
            value: 0.0,
            tolerance: opts.tol,
            iterations: 0,
            lower: 0.0,
            upper: 0.0,
            witness: TreeVector::zero(f.depth),
            bounds_history: vec![(0.0, 0.0)],
        });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::input("tolerance must be positive"));
    }

    let ctx = CutContext::new(f);
    let n = ctx.vars.len();
    let c: Vec<f64> = ctx.vars.iter().map(|&k| to_f64(&f.get(k))).collect();
    let l1: f64 = c.iter().map(|v| v.abs()).sum();

    // dyadic rounding of master points: keep the rounding error of the
    // pairing far below the tolerance
    let mut bits: u32 = 24;
    while (l1 + 1.0) * (-(bits as f64)).exp2() > opts.tol / 64.0 && bits < 56 {
        bits += 8;
    }

    let mut master = ColumnLp::new(&c);
    let mut pool: Vec<Partition> = Vec::new();
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut witness: Option<TreeVector> = None;
    let mut history: Vec<(f64, f64)> = Vec::new();
    let mut stalls = 0u32;

    // seed: the norming partition of f itself, linearized at f / ‖f‖
    {
        let f_primal = ctx.vector_from(
            &ctx.vars
                .iter()
                .map(|&k| f.get(k))
                .collect::<Vec<_>>(),
        );
        let cert = jt_norm_sq(&f_primal);
        if !cert.value_sq.is_zero() {
            if let Some(g) = ctx.linearize(&cert.witness, &f_primal) {
                master.add_cut(g);
            }
            let r = sqrt_upper(&cert.value_sq, 3);
            let scaled = f_primal.scale(&(Rational::one() / &r));
            debug_assert!(jt_norm_sq(&scaled).value_sq <= Rational::one());
            lower = to_f64(&pairing(f, &scaled));
            witness = Some(scaled);
            pool.push(cert.witness);
        }
    }

    for iteration in 1..=opts.max_iterations {
        let sol = master.solve(50_000).map_err(|_| Error::NonConvergence {
            lower: if lower.is_finite() { lower } else { 0.0 },
            upper: if upper.is_finite() { upper } else { l1 * n as f64 },
            iterations: iteration,
        })?;
        // master optima are valid outer bounds and only tighten as cuts
        // accumulate; keep the record monotone against float wobble
        upper = upper.min(sol.objective + 1e-12);

        // exact rational candidate from the master point
        let coords: Vec<Rational> = sol
            .x
            .iter()
            .map(|&v| dyadic_from_f64(v.clamp(-1.0, 1.0), bits))
            .collect();
        let xt = ctx.vector_from(&coords);
        let cert = jt_norm_sq(&xt);

        if cert.value_sq <= Rational::one() {
            let cand = to_f64(&pairing(f, &xt));
            if cand > lower {
                lower = cand;
                witness = Some(xt);
            }
            // feasible master point: the relaxation is tight up to rounding
            if upper - lower > opts.tol * 0.9 {
                stalls += 1;
                if bits < 56 {
                    bits += 8;
                }
                if stalls > 6 {
                    history.push((lower, upper));
                    return Err(Error::NonConvergence {
                        lower,
                        upper,
                        iterations: iteration,
                    });
                }
            }
        } else {
            let r = sqrt_upper(&cert.value_sq, 3);
            let scaled = xt.scale(&(Rational::one() / &r));
            debug_assert!(jt_norm_sq(&scaled).value_sq <= Rational::one());
            let cand = to_f64(&pairing(f, &scaled));
            if cand > lower {
                lower = cand;
                witness = Some(scaled);
            }
            if let Some(g) = ctx.linearize(&cert.witness, &xt) {
                master.add_cut(g);
            }
            // re-linearize a few pooled partitions still violated here
            let mut added = 0;
            for p in pool.iter().rev() {
                if added >= opts.pool_cuts_per_iteration {
                    break;
                }
                if let Some(g) = ctx.linearize(p, &xt) {
                    master.add_cut(g);
                    added += 1;
                }
            }
            pool.push(cert.witness);
            if pool.len() > 48 {
                pool.remove(0);
            }
        }

        history.push((lower, upper));
        if upper - lower <= opts.tol * 0.9 {
            let witness = witness.expect("a lower bound implies a witness");
            return Ok(DualResult {
                value: 0.5 * (upper + lower),
                tolerance: opts.tol,
                iterations: iteration,
                lower,
                upper,
                witness,
                bounds_history: history,
            });
        }
        if master.num_columns() > 2 * n + 700 {
            master.prune(350);
        }
    }

    Err(Error::NonConvergence {
        lower,
        upper,
        iterations: opts.max_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};
    use crate::tree::Branch;

    fn seg(t: NodeKey, b: NodeKey) -> Segment {
        Segment::new(t, b).unwrap()
    }

    #[test]
    fn segment_functional_examples() {
        assert_eq!(
            segment_functional(&seg(2, 2)),
            DualVector::from_ints(1, &[(2, 1)]).unwrap()
        );
        assert_eq!(
            segment_functional(&seg(1, 4)),
            DualVector::from_ints(2, &[(1, 1), (2, 1), (4, 1)]).unwrap()
        );
        assert_eq!(
            segment_functional(&seg(1, 13)),
            DualVector::from_ints(3, &[(1, 1), (3, 1), (6, 1), (13, 1)]).unwrap()
        );
    }

    #[test]
    fn pairing_examples() {
        let x = TreeVector::from_ints(1, &[(2, 1), (3, 1)]).unwrap();
        let f = DualVector::from_ints(1, &[(2, 1), (3, 1)]).unwrap();
        assert_eq!(pairing(&f, &x), qi(2));

        let f = segment_functional(&seg(1, 2));
        let x = TreeVector::from_ints(1, &[(1, 1), (2, 1)]).unwrap();
        assert_eq!(pairing(&f, &x), qi(2));

        let f = DualVector::zero(1);
        assert_eq!(pairing(&f, &x), qi(0));
    }

    #[test]
    fn w_element_examples() {
        let w = WElement::new(vec![(qi(1), seg(2, 2)), (qi(0), seg(3, 3))]);
        assert!(w_element_check(&w));
        let w = WElement::new(vec![(q(3, 5), seg(2, 2)), (q(4, 5), seg(3, 3))]);
        assert!(w_element_check(&w));
        let w = WElement::new(vec![(qi(1), seg(1, 2)), (qi(1), seg(3, 3))]);
        assert!(!w_element_check(&w));
        // overlap fails even with small coefficients
        let w = WElement::new(vec![(q(1, 2), seg(1, 2)), (q(1, 2), seg(2, 4))]);
        assert!(!w_element_check(&w));
    }

    #[test]
    fn dual_norm_of_segment_functionals_is_one() {
        for s in [seg(1, 1), seg(2, 5), seg(1, 13), seg(3, 27)] {
            let f = segment_functional(&s);
            let r = jtstar_norm(&f, 1e-7).unwrap();
            assert!(
                (r.value - 1.0).abs() <= 1e-7,
                "‖s*‖ = {} for {s:?}",
                r.value
            );
        }
    }

    #[test]
    fn dual_norm_incomparable_pair_is_sqrt2() {
        let f = DualVector::from_ints(1, &[(2, 1), (3, 1)]).unwrap();
        let r = jtstar_norm(&f, 1e-7).unwrap();
        assert!((r.value - 2f64.sqrt()).abs() <= 1e-7, "got {}", r.value);
    }

    #[test]
    fn dual_norm_chain_pair_is_one() {
        let f = DualVector::from_ints(1, &[(1, 1), (2, 1)]).unwrap();
        let r = jtstar_norm(&f, 1e-7).unwrap();
        assert!((r.value - 1.0).abs() <= 1e-7, "got {}", r.value);
    }

    #[test]
    fn dual_norm_three_four_is_five_at_tight_tolerance() {
        let f = DualVector::from_ints(2, &[(2, 3), (3, 4)]).unwrap();
        let r = jtstar_norm(&f, 1e-9).unwrap();
        assert!((r.value - 5.0).abs() <= 1e-9, "got {}", r.value);
    }

    #[test]
    fn witness_is_feasible_and_supports_value() {
        let f = DualVector::new(
            3,
            [
                (1u64, q(1, 2)),
                (5, qi(-2)),
                (6, q(3, 4)),
                (13, qi(1)),
            ],
        )
        .unwrap();
        let r = jtstar_norm(&f, 1e-6).unwrap();
        assert!(jt_norm_sq(&r.witness).value_sq <= Rational::one());
        let p = to_f64(&pairing(&f, &r.witness));
        assert!(p >= r.value - r.tolerance);
        assert!(r.lower <= r.upper);
        assert!(r.value <= r.upper && r.value >= r.lower);
    }

    #[test]
    fn bounds_are_monotone_and_bracket() {
        let f = DualVector::new(3, [(2u64, q(5, 4)), (3, qi(-1)), (9, q(2, 3))]).unwrap();
        let r = jtstar_norm(&f, 1e-7).unwrap();
        for w in r.bounds_history.windows(2) {
            assert!(w[1].0 >= w[0].0 - 1e-12, "lower bounds must not decrease");
            assert!(w[1].1 <= w[0].1 + 1e-12, "upper bounds must not increase");
        }
        for &(lo, hi) in &r.bounds_history {
            if lo.is_finite() && hi.is_finite() {
                assert!(r.value >= lo - 1e-9 && r.value <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn predual_norm_along_branch_matches_lemma_value() {
        // on one branch, incomparable-node families degenerate: e₁* + e₂*
        // along the branch is a segment functional
        let b = Branch::from_bits("01").unwrap();
        let keys = b.keys();
        let f = DualVector::new(
            2,
            [(keys[0], qi(1)), (keys[1], qi(1)), (keys[2], qi(1))],
        )
        .unwrap();
        let r = jtstar_norm(&f, 1e-7).unwrap();
        assert!((r.value - 1.0).abs() <= 1e-7);
    }
}

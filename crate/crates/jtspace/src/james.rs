//! The James space `J` on finite-support sequences.
//!
//! `‖x‖² = max Σ_i (Σ_{k∈I_i} x(k))²` over finite families of pairwise
//! disjoint intervals of `ℕ`.  The maximum is computed exactly by a dynamic
//! program over support runs, together with an attaining interval family.
//! Certificates are canonical: fewest intervals first, endpoints carry
//! nonzero coefficients, zero-sum intervals are omitted.

use std::collections::BTreeMap;

use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{rational_from_json, rational_to_json, Rational, RationalJson};

/// A finite-support map from positive positions to exact rationals.
/// Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "SeqVectorJson", into = "SeqVectorJson")]
pub struct SeqVector {
    entries: BTreeMap<u64, Rational>,
}

#[derive(Serialize, Deserialize)]
struct SeqEntryJson {
    pos: u64,
    num: serde_json::Number,
    den: serde_json::Number,
}

#[derive(Serialize, Deserialize)]
struct SeqVectorJson {
    entries: Vec<SeqEntryJson>,
}

impl TryFrom<SeqVectorJson> for SeqVector {
    type Error = Error;
    fn try_from(j: SeqVectorJson) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for e in j.entries {
            let r = rational_from_json(&RationalJson {
                num: e.num,
                den: e.den,
            })?;
            if e.pos == 0 {
                return Err(Error::input("sequence positions must be ≥ 1"));
            }
            if entries.insert(e.pos, r).is_some() {
                return Err(Error::input(format!("duplicate position {}", e.pos)));
            }
        }
        entries.retain(|_, v| !v.is_zero());
        Ok(SeqVector { entries })
    }
}

impl From<SeqVector> for SeqVectorJson {
    fn from(x: SeqVector) -> Self {
        SeqVectorJson {
            entries: x
                .entries
                .iter()
                .map(|(&pos, v)| {
                    let q = rational_to_json(v);
                    SeqEntryJson {
                        pos,
                        num: q.num,
                        den: q.den,
                    }
                })
                .collect(),
        }
    }
}

impl SeqVector {
    pub fn new(entries: impl IntoIterator<Item = (u64, Rational)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (pos, v) in entries {
            if pos == 0 {
                return Err(Error::input("sequence positions must be ≥ 1"));
            }
            if v.is_zero() {
                continue;
            }
            if map.insert(pos, v).is_some() {
                return Err(Error::input(format!("duplicate position {pos}")));
            }
        }
        Ok(SeqVector { entries: map })
    }

    pub fn zero() -> Self {
        SeqVector::default()
    }

    pub fn from_ints(entries: &[(u64, i64)]) -> Self {
        SeqVector::new(
            entries
                .iter()
                .map(|&(p, v)| (p, crate::rational::qi(v))),
        )
        .expect("valid integer entries")
    }

    pub fn entries(&self) -> &BTreeMap<u64, Rational> {
        &self.entries
    }

    pub fn get(&self, pos: u64) -> Rational {
        self.entries.get(&pos).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn min_pos(&self) -> Option<u64> {
        self.entries.keys().next().copied()
    }

    pub fn max_pos(&self) -> Option<u64> {
        self.entries.keys().next_back().copied()
    }

    /// Smallest interval containing the support, if nonempty.
    pub fn range(&self) -> Option<Interval> {
        Some(Interval::new(self.min_pos()?, self.max_pos()?).expect("min ≤ max"))
    }

    pub fn scale(&self, c: &Rational) -> SeqVector {
        if c.is_zero() {
            return SeqVector::zero();
        }
        SeqVector {
            entries: self
                .entries
                .iter()
                .map(|(&p, v)| (p, v * c))
                .collect(),
        }
    }

    pub fn add(&self, other: &SeqVector) -> SeqVector {
        let mut entries = self.entries.clone();
        for (&p, v) in &other.entries {
            let slot = entries.entry(p).or_insert_with(Rational::zero);
            *slot += v;
        }
        entries.retain(|_, v| !v.is_zero());
        SeqVector { entries }
    }

    /// Coefficients outside `[lo, hi]` zeroed.
    pub fn restrict_to(&self, lo: u64, hi: u64) -> SeqVector {
        SeqVector {
            entries: self
                .entries
                .range(lo..=hi)
                .map(|(&p, v)| (p, v.clone()))
                .collect(),
        }
    }

    /// Positions shifted by `offset`.
    pub fn shift(&self, offset: u64) -> SeqVector {
        SeqVector {
            entries: self
                .entries
                .iter()
                .map(|(&p, v)| (p + offset, v.clone()))
                .collect(),
        }
    }
}

/// A closed integer interval `[lo, hi]` with `1 ≤ lo ≤ hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "IntervalJson", into = "IntervalJson")]
pub struct Interval {
    lo: u64,
    hi: u64,
}

#[derive(Serialize, Deserialize)]
struct IntervalJson {
    lo: u64,
    hi: u64,
}

impl TryFrom<IntervalJson> for Interval {
    type Error = Error;
    fn try_from(j: IntervalJson) -> Result<Self> {
        Interval::new(j.lo, j.hi)
    }
}

impl From<Interval> for IntervalJson {
    fn from(i: Interval) -> Self {
        IntervalJson { lo: i.lo, hi: i.hi }
    }
}

impl Interval {
    pub fn new(lo: u64, hi: u64) -> Result<Self> {
        if lo == 0 {
            return Err(Error::input("interval endpoints must be ≥ 1"));
        }
        if lo > hi {
            return Err(Error::input(format!("interval [{lo}, {hi}] is inverted")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn contains(&self, p: u64) -> bool {
        self.lo <= p && p <= self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Pairwise disjoint intervals in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "IntervalPartitionJson", into = "IntervalPartitionJson")]
pub struct IntervalPartition {
    intervals: Vec<Interval>,
}

#[derive(Serialize, Deserialize)]
struct IntervalPartitionJson {
    intervals: Vec<Interval>,
}

impl TryFrom<IntervalPartitionJson> for IntervalPartition {
    type Error = Error;
    fn try_from(j: IntervalPartitionJson) -> Result<Self> {
        IntervalPartition::new(j.intervals)
    }
}

impl From<IntervalPartition> for IntervalPartitionJson {
    fn from(p: IntervalPartition) -> Self {
        IntervalPartitionJson {
            intervals: p.intervals,
        }
    }
}

impl IntervalPartition {
    pub fn new(mut intervals: Vec<Interval>) -> Result<Self> {
        intervals.sort();
        for w in intervals.windows(2) {
            if w[0].overlaps(&w[1]) {
                return Err(Error::input(format!(
                    "intervals [{}, {}] and [{}, {}] overlap",
                    w[0].lo(),
                    w[0].hi(),
                    w[1].lo(),
                    w[1].hi()
                )));
            }
        }
        Ok(IntervalPartition { intervals })
    }

    pub fn empty() -> Self {
        IntervalPartition::default()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// The exact squared norm together with its certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JNorm {
    pub value_sq: Rational,
    pub certificate: IntervalPartition,
}

/// `Σ_{lo ≤ k ≤ hi} x(k)`.
pub fn interval_eval(i: &Interval, x: &SeqVector) -> Rational {
    let mut sum = Rational::zero();
    for (_, v) in x.entries.range(i.lo..=i.hi) {
        sum += v;
    }
    sum
}

/// The functional for `I = ℕ`: the sum of all coefficients.
pub fn i_infty(x: &SeqVector) -> Rational {
    let mut sum = Rational::zero();
    for v in x.entries.values() {
        sum += v;
    }
    sum
}

/// Partition seminorm squared `Σ_i (Σ_{k∈I_i} x(k))²`; a lower bound for the
/// squared norm for any disjoint family.
pub fn interval_partition_eval_sq(p: &IntervalPartition, x: &SeqVector) -> Rational {
    let mut total = Rational::zero();
    for i in &p.intervals {
        let s = interval_eval(i, x);
        total += &s * &s;
    }
    total
}

// DP state: best achievable (squared value, interval count), ordered by value
// first, then by fewest intervals.
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

    fn better_than(&self, other: &Best) -> bool {
        self.value > other.value || (self.value == other.value && self.count < other.count)
    }
}

/// Exact maximum of `Σ (interval sum)²` over disjoint interval families, with
/// an attaining family.
///
/// Only which support runs an interval covers matters, so the search space is
/// runs of consecutive support positions; a suffix DP over the support gives
/// the maximum and a deterministic certificate (fewest intervals, then the
/// structurally earliest choice at each tie).
pub fn j_norm_sq(x: &SeqVector) -> JNorm {
    let positions: Vec<u64> = x.entries.keys().copied().collect();
    let values: Vec<&Rational> = x.entries.values().collect();
    let n = positions.len();
    if n == 0 {
        return JNorm {
            value_sq: Rational::zero(),
            certificate: IntervalPartition::empty(),
        };
    }

    // prefix[i] = v₀ + … + v_{i−1}
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(Rational::zero());
    for v in &values {
        let last = prefix.last().unwrap().clone();
        prefix.push(last + *v);
    }
    let run_sum = |i: usize, j: usize| -> Rational { &prefix[j + 1] - &prefix[i] };

    // best[i] = optimum over the support suffix i..n
    let mut best: Vec<Best> = vec![Best::zero(); n + 1];
    for i in (0..n).rev() {
        // skip position i
        let mut b = best[i + 1].clone();
        for j in i..n {
            let s = run_sum(i, j);
            let gain = &s * &s;
            let cand = Best {
                value: gain + &best[j + 1].value,
                count: 1 + best[j + 1].count,
            };
            if cand.better_than(&b) {
                b = cand;
            }
        }
        best[i] = b;
    }

    // Reconstruct left to right.  Preference at equal (value, count): cover
    // the current position, with the shortest run; skip only when no run
    // from here attains the optimum.
    let mut intervals = Vec::with_capacity(best[0].count as usize);
    let mut i = 0;
    while i < n {
        let target = best[i].clone();
        let mut taken = false;
        for j in i..n {
            let s = run_sum(i, j);
            let cand = Best {
                value: &s * &s + &best[j + 1].value,
                count: 1 + best[j + 1].count,
            };
            if cand == target {
                intervals.push(Interval::new(positions[i], positions[j]).unwrap());
                i = j + 1;
                taken = true;
                break;
            }
        }
        if !taken {
            debug_assert!(best[i] == best[i + 1]);
            i += 1;
        }
    }

    let certificate = IntervalPartition::new(intervals).expect("runs are disjoint by construction");
    debug_assert_eq!(interval_partition_eval_sq(&certificate, x), best[0].value);
    JNorm {
        value_sq: best[0].value.clone(),
        certificate,
    }
}

/// The certificate component of [`j_norm_sq`]: evaluating the partition
/// seminorm on `x` reproduces the squared norm exactly.
pub fn j_norming_partition(x: &SeqVector) -> IntervalPartition {
    j_norm_sq(x).certificate
}

/// `|x(k)| ≤ ‖x‖` per position, so the squared norm bounds every squared
/// coefficient; used by callers needing a quick sanity bound.
pub fn sup_coefficient_sq(x: &SeqVector) -> Rational {
    x.entries
        .values()
        .map(|v| v * v)
        .max()
        .unwrap_or_else(Rational::zero)
}

//! Independent brute-force references.
//!
//! Everything here maximizes over explicitly enumerated families, with no
//! shared code path into the dynamic-programming engines, so agreement is
//! meaningful evidence.  Sizes are capped accordingly: sequences to a handful
//! of support points, trees to the enumeration depth, the dual ball to the
//! depth-1 tree.

use num::{Signed, Zero};

use crate::dual::DualVector;
use crate::error::{Error, Result};
use crate::james::SeqVector;
use crate::jt::TreeVector;
use crate::rational::{to_f64, Rational};
use crate::tree::{enumerate_partitions, enumerate_segments, max_key, Segment};

/// Exact `J` norm squared by enumerating every family of disjoint support
/// runs.  Exponential; intended for support sizes ≤ ~12.
pub fn j_norm_sq_brute(x: &SeqVector) -> Rational {
    let values: Vec<&Rational> = x.entries().values().collect();
    let n = values.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(Rational::zero());
    for v in &values {
        let last = prefix.last().unwrap().clone();
        prefix.push(last + *v);
    }
    // run_sq[i][j]: squared sum of support run i..=j
    let mut run_sq = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let s = &prefix[j + 1] - &prefix[i];
            run_sq[i][j] = &s * &s;
        }
    }
    let mut best = Rational::zero();
    fn rec(i: usize, acc: &Rational, run_sq: &[Vec<Rational>], n: usize, best: &mut Rational) {
        if acc > best {
            *best = acc.clone();
        }
        if i >= n {
            return;
        }
        // leave position i uncovered
        rec(i + 1, acc, run_sq, n, best);
        // or close a run i..=j
        for j in i..n {
            let acc2 = acc + &run_sq[i][j];
            rec(j + 1, &acc2, run_sq, n, best);
        }
    }
    rec(0, &Rational::zero(), &run_sq, n, &mut best);
    best
}

/// Exact `JT` norm squared by enumerating every family of pairwise disjoint
/// segments of the complete depth-`depth` tree.  Refuses depths beyond the
/// enumeration cap.
pub fn jt_norm_sq_brute(x: &TreeVector, depth: u32) -> Result<Rational> {
    if let Some(&k) = x.entries().keys().next_back() {
        if k > max_key(depth) {
            return Err(Error::input(format!(
                "support key {k} outside the depth-{depth} tree"
            )));
        }
    }
    if depth > crate::tree::ENUMERATION_DEPTH_CAP {
        return Err(Error::EnumerationTooLarge {
            depth,
            estimate: crate::tree::count_partitions(depth),
        });
    }
    // zero-sum segments contribute nothing to any family's value
    let useful: Vec<(Segment, Rational)> = enumerate_segments(depth)
        .into_iter()
        .map(|s| {
            let sum = x.segment_sum(&s);
            let sq = &sum * &sum;
            (s, sq)
        })
        .filter(|(_, sq)| !sq.is_zero())
        .collect();
    let n = useful.len();
    let mut compatible = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            compatible[i][j] = i != j && !useful[i].0.intersects(&useful[j].0);
        }
    }
    let mut best = Rational::zero();
    fn rec(
        start: usize,
        chosen: &mut Vec<usize>,
        acc: &Rational,
        useful: &[(Segment, Rational)],
        compatible: &[Vec<bool>],
        best: &mut Rational,
    ) {
        if acc > best {
            *best = acc.clone();
        }
        for i in start..useful.len() {
            if chosen.iter().all(|&j| compatible[j][i]) {
                chosen.push(i);
                let acc2 = acc + &useful[i].1;
                rec(i + 1, chosen, &acc2, useful, compatible, best);
                chosen.pop();
            }
        }
    }
    rec(
        0,
        &mut Vec::new(),
        &Rational::zero(),
        &useful,
        &compatible,
        &mut best,
    );
    Ok(best)
}

/// Exact maximum cardinality of a pairwise disjoint family of segments whose
/// sums all satisfy `|σ_s(x)| ≥ eps`, by subset enumeration.  Exhaustive
/// reference for small depths.
pub fn max_large_family_brute(x: &TreeVector, eps: &Rational, depth: u32) -> Result<usize> {
    if depth > crate::tree::ENUMERATION_DEPTH_CAP {
        return Err(Error::EnumerationTooLarge {
            depth,
            estimate: crate::tree::count_partitions(depth),
        });
    }
    let qualifying: Vec<Segment> = enumerate_segments(depth)
        .into_iter()
        .filter(|s| x.segment_sum(s).abs() >= *eps)
        .collect();
    let n = qualifying.len();
    let mut compatible = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            compatible[i][j] = i != j && !qualifying[i].intersects(&qualifying[j]);
        }
    }
    fn rec(
        start: usize,
        chosen: &mut Vec<usize>,
        qualifying: &[Segment],
        compatible: &[Vec<bool>],
        best: &mut usize,
    ) {
        *best = (*best).max(chosen.len());
        for i in start..qualifying.len() {
            if chosen.iter().all(|&j| compatible[j][i]) {
                chosen.push(i);
                rec(i + 1, chosen, qualifying, compatible, best);
                chosen.pop();
            }
        }
    }
    let mut best = 0;
    rec(0, &mut Vec::new(), &qualifying, &compatible, &mut best);
    Ok(best)
}

/// Direct maximization of `⟨f, x⟩` over the depth-1 unit ball, described by
/// the 11 explicitly enumerated partition constraints `p_norm(x, P) ≤ 1` in
/// three coordinates.
///
/// The value is `max ⟨f, u⟩ / g(u)` over directions `u` on the sphere, where
/// `g` is the pointwise maximum of the partition seminorms.  Superlevel sets
/// of that ratio are convex cones, so a dense spherical grid followed by
/// local refinement converges to the global maximum; no cutting planes or
/// linear programming are involved.
pub fn jtstar_norm_depth1_oracle(f: &DualVector) -> f64 {
    let c = [
        to_f64(&f.get(1)),
        to_f64(&f.get(2)),
        to_f64(&f.get(3)),
    ];
    if c.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    let partitions = enumerate_partitions(1).expect("depth 1 is enumerable");
    // per partition, the member keys of each segment
    let families: Vec<Vec<Vec<usize>>> = partitions
        .iter()
        .map(|p| {
            p.segments()
                .iter()
                .map(|s| s.keys().iter().map(|&k| k as usize - 1).collect())
                .collect()
        })
        .collect();

    let g = |u: &[f64; 3]| -> f64 {
        let mut worst: f64 = 0.0;
        for fam in &families {
            let mut total = 0.0;
            for seg in fam {
                let s: f64 = seg.iter().map(|&i| u[i]).sum();
                total += s * s;
            }
            worst = worst.max(total);
        }
        worst.sqrt()
    };
    let value = |theta: f64, phi: f64| -> f64 {
        let u = [
            phi.sin() * theta.cos(),
            phi.sin() * theta.sin(),
            phi.cos(),
        ];
        let num = c[0] * u[0] + c[1] * u[1] + c[2] * u[2];
        if num <= 0.0 {
            return 0.0;
        }
        num / g(&u)
    };

    // dense coarse scan
    let mut best = (0.0f64, 0.0f64, 0.0f64);
    let steps_t = 240;
    let steps_p = 120;
    for it in 0..steps_t {
        let theta = 2.0 * std::f64::consts::PI * it as f64 / steps_t as f64;
        for ip in 0..=steps_p {
            let phi = std::f64::consts::PI * ip as f64 / steps_p as f64;
            let v = value(theta, phi);
            if v > best.0 {
                best = (v, theta, phi);
            }
        }
    }
    // local 9-point refinement with shrinking step
    let (mut v0, mut t0, mut p0) = best;
    let mut step = 2.0 * std::f64::consts::PI / steps_t as f64;
    for _ in 0..64 {
        let mut improved = false;
        for dt in [-1.0, 0.0, 1.0] {
            for dp in [-1.0, 0.0, 1.0] {
                let v = value(t0 + dt * step, p0 + dp * step);
                if v > v0 {
                    v0 = v;
                    t0 += dt * step;
                    p0 += dp * step;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-13 {
                break;
            }
        }
    }
    v0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::james::j_norm_sq;
    use crate::rational::qi;

    #[test]
    fn j_brute_matches_hand_values() {
        assert_eq!(
            j_norm_sq_brute(&SeqVector::from_ints(&[(1, 1), (2, 1), (3, 1)])),
            qi(9)
        );
        assert_eq!(
            j_norm_sq_brute(&SeqVector::from_ints(&[(1, 1), (2, -1), (3, 1)])),
            qi(3)
        );
        assert_eq!(j_norm_sq_brute(&SeqVector::zero()), qi(0));
    }

    #[test]
    fn jt_brute_matches_hand_values() {
        let x = TreeVector::from_ints(1, &[(1, 1), (2, 1), (3, 1)]).unwrap();
        assert_eq!(jt_norm_sq_brute(&x, 1).unwrap(), qi(5));
        let x = TreeVector::from_ints(2, &[(1, 1), (2, -1), (5, 1)]).unwrap();
        // best family: {(1,1)}, {(2,2)}, {(5,5)} → 3;  (1,5) sums to 1
        assert_eq!(jt_norm_sq_brute(&x, 2).unwrap(), qi(3));
    }

    #[test]
    fn depth1_oracle_on_known_functionals() {
        let f = DualVector::from_ints(1, &[(2, 1), (3, 1)]).unwrap();
        let v = jtstar_norm_depth1_oracle(&f);
        assert!((v - 2f64.sqrt()).abs() < 1e-8, "got {v}");
        let f = DualVector::from_ints(1, &[(1, 1), (2, 1)]).unwrap();
        let v = jtstar_norm_depth1_oracle(&f);
        assert!((v - 1.0).abs() < 1e-8, "got {v}");
        let f = DualVector::from_ints(1, &[(1, 1)]).unwrap();
        let v = jtstar_norm_depth1_oracle(&f);
        assert!((v - 1.0).abs() < 1e-8, "got {v}");
    }

    #[test]
    fn brute_norm_consistent_with_fast_engine_on_sequences() {
        let x = SeqVector::from_ints(&[(2, 2), (4, -1), (7, 3), (9, -2)]);
        assert_eq!(j_norm_sq_brute(&x), j_norm_sq(&x).value_sq);
    }
}

//! Ranking evaluation: hit curve and its area, eAUC, pooled
//! precision/recall curves, and prefix F-measure.
//!
//! All curves are emitted per prefix (one point per call), matching the
//! call-ordered semantics of the hit curve. Consumers may thin for plotting.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Early-call-driven area under curve: `sum_k (n - k + 1) * lpr_(k)` with
/// positions `k` counted from 1 in call order.
pub fn eauc(lpr_in_order: &[f64]) -> f64 {
    let n = lpr_in_order.len();
    lpr_in_order
        .iter()
        .enumerate()
        .map(|(i, &v)| (n - i) as f64 * v)
        .sum()
}

/// Exact rational eAUC over the dyadic rationals represented by the input
/// floats. Used for tie-invariance audits where float associativity drift
/// must not matter.
pub fn eauc_exact(lpr_in_order: &[f64]) -> BigRational {
    let n = lpr_in_order.len();
    let mut acc = BigRational::zero();
    for (i, &v) in lpr_in_order.iter().enumerate() {
        let weight = BigRational::from_integer(BigInt::from((n - i) as u64));
        let value = BigRational::from_float(v).expect("finite LPR");
        acc += weight * value;
    }
    acc
}

/// Area under the hit curve: `sum_k (n - k + 1) * truth_(k)`, exact integer
/// arithmetic.
pub fn hit_auc(truth_in_order: &[bool]) -> u64 {
    let n = truth_in_order.len();
    truth_in_order
        .iter()
        .enumerate()
        .filter(|(_, &hit)| hit)
        .map(|(i, _)| (n - i) as u64)
        .sum()
}

/// Hit curve points `(calls_made, cumulative_hits)` for calls `1..=n`.
pub fn hit_curve(truth_in_order: &[bool]) -> Vec<(usize, usize)> {
    let mut hits = 0;
    truth_in_order
        .iter()
        .enumerate()
        .map(|(i, &hit)| {
            hits += usize::from(hit);
            (i + 1, hits)
        })
        .collect()
}

/// Pooled precision-recall points per prefix: point `k` has
/// `precision = hits(k) / k` and `recall = hits(k) / total_positives`.
///
/// `total_positives` may exceed the positives present in the prefix sequence
/// (prefix evaluation of a longer list).
pub fn pr_curve(truth_in_order: &[bool], total_positives: usize) -> Result<Vec<(f64, f64)>> {
    if total_positives == 0 {
        return Err(Error::ZeroPositives);
    }
    let mut hits = 0usize;
    Ok(truth_in_order
        .iter()
        .enumerate()
        .map(|(i, &hit)| {
            hits += usize::from(hit);
            (
                hits as f64 / total_positives as f64,
                hits as f64 / (i + 1) as f64,
            )
        })
        .collect())
}

/// Prefix F-measure at call `k` (1-based): harmonic mean of prefix precision
/// and recall, 0 when both are 0.
pub fn f_measure_at(truth_in_order: &[bool], k: usize, total_positives: usize) -> f64 {
    assert!(k >= 1 && k <= truth_in_order.len(), "k out of range");
    let hits = truth_in_order[..k].iter().filter(|&&b| b).count();
    let p = hits as f64 / k as f64;
    let r = if total_positives == 0 {
        0.0
    } else {
        hits as f64 / total_positives as f64
    };
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Hit curve, PR curve, and scalar summaries for one ranking against truth.
#[derive(Debug, Clone)]
pub struct CurveSet {
    pub hit_curve: Vec<(usize, usize)>,
    pub pr_curve: Vec<(f64, f64)>,
    pub hit_auc: u64,
    pub eauc: f64,
    /// Maximal prefix F-measure and the 1-based cut index attaining it.
    pub max_f: (f64, usize),
}

impl CurveSet {
    pub fn compute(truth_in_order: &[bool], lpr_in_order: &[f64]) -> Result<Self> {
        if truth_in_order.len() != lpr_in_order.len() {
            return Err(Error::LengthMismatch {
                expected: truth_in_order.len(),
                got: lpr_in_order.len(),
            });
        }
        let total_positives = truth_in_order.iter().filter(|&&b| b).count();
        let pr = pr_curve(truth_in_order, total_positives)?;
        let mut max_f = (0.0f64, 1usize);
        let mut hits = 0usize;
        for (i, &hit) in truth_in_order.iter().enumerate() {
            hits += usize::from(hit);
            let p = hits as f64 / (i + 1) as f64;
            let r = hits as f64 / total_positives as f64;
            let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            if f > max_f.0 {
                max_f = (f, i + 1);
            }
        }
        Ok(Self {
            hit_curve: hit_curve(truth_in_order),
            pr_curve: pr,
            hit_auc: hit_auc(truth_in_order),
            eauc: eauc(lpr_in_order),
            max_f,
        })
    }
}

/// Vertically average PR curves on a fixed recall grid with linear
/// interpolation. Returns `(recall, mean precision)` pairs.
pub fn average_pr_curves(curves: &[Vec<(f64, f64)>], grid_size: usize) -> Vec<(f64, f64)> {
    assert!(grid_size >= 2);
    let grid: Vec<f64> = (0..grid_size)
        .map(|i| i as f64 / (grid_size - 1) as f64)
        .collect();
    let mut means = vec![0.0f64; grid_size];
    for curve in curves {
        for (slot, &r) in grid.iter().enumerate() {
            means[slot] += precision_at_recall(curve, r);
        }
    }
    let denom = curves.len().max(1) as f64;
    grid.into_iter()
        .zip(means.into_iter().map(|s| s / denom))
        .collect()
}

/// Precision at a recall level by linear interpolation along the prefix
/// curve; clamps to the first/last observed recall.
fn precision_at_recall(curve: &[(f64, f64)], recall: f64) -> f64 {
    debug_assert!(!curve.is_empty());
    let first = curve[0];
    if recall <= first.0 {
        return first.1;
    }
    let last = curve[curve.len() - 1];
    if recall >= last.0 {
        return last.1;
    }
    // First point with recall >= target; recalls are nondecreasing.
    let hi = curve.partition_point(|&(r, _)| r < recall);
    let (r1, p1) = curve[hi];
    if r1 == recall {
        return p1;
    }
    // Walk back past ties to the last point strictly below.
    let mut lo = hi - 1;
    while lo > 0 && curve[lo].0 == curve[hi].0 {
        lo -= 1;
    }
    let (r0, p0) = curve[lo];
    if r1 == r0 {
        return p1;
    }
    p0 + (p1 - p0) * (recall - r0) / (r1 - r0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eauc_singleton() {
        assert_eq!(eauc(&[0.5]), 0.5);
    }

    #[test]
    fn eauc_three_values() {
        // 3*0.9 + 2*0.5 + 1*0.8
        assert!((eauc(&[0.9, 0.5, 0.8]) - 4.5).abs() < 1e-12);
    }

    #[test]
    fn eauc_all_zero() {
        assert_eq!(eauc(&[0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn eauc_linearity() {
        let xs = [0.3, 0.7, 0.1, 0.9];
        for &a in &[0.0, 0.25, 1.0] {
            let scaled: Vec<f64> = xs.iter().map(|&x| a * x).collect();
            assert!((eauc(&scaled) - a * eauc(&xs)).abs() < 1e-12);
        }
    }

    #[test]
    fn hit_auc_direct() {
        assert_eq!(hit_auc(&[true, false, true]), 4);
        assert_eq!(hit_auc(&[false, false, false]), 0);
    }

    /// Second implementation as oracle: sum over prefixes of cumulative hits.
    fn hit_auc_by_prefix_sums(truth: &[bool]) -> u64 {
        let mut total = 0u64;
        for i in 1..=truth.len() {
            total += truth[..i].iter().filter(|&&b| b).count() as u64;
        }
        total
    }

    #[test]
    fn hit_auc_matches_prefix_sum_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let len = rng.gen_range(0..40);
            let bits: Vec<bool> = (0..len).map(|_| rng.gen_bool(0.4)).collect();
            assert_eq!(hit_auc(&bits), hit_auc_by_prefix_sums(&bits));
        }
    }

    #[test]
    fn hit_auc_equals_eauc_on_bits() {
        let bits = [true, false, true, true, false];
        let as_lpr: Vec<f64> = bits.iter().map(|&b| f64::from(u8::from(b))).collect();
        assert_eq!(hit_auc(&bits) as f64, eauc(&as_lpr));
    }

    #[test]
    fn pr_curve_two_hits() {
        let pts = pr_curve(&[true, true], 2).unwrap();
        assert_eq!(pts, vec![(0.5, 1.0), (1.0, 1.0)]);
    }

    #[test]
    fn pr_curve_miss_then_hit() {
        let pts = pr_curve(&[false, true], 1).unwrap();
        assert_eq!(pts, vec![(0.0, 0.0), (1.0, 0.5)]);
    }

    #[test]
    fn pr_curve_positives_after_many_negatives() {
        // 5 positives only after 100 negatives: precision 0 for the first
        // 100 points while the hit curve stays flat.
        let mut bits = vec![false; 100];
        bits.extend(vec![true; 5]);
        let pts = pr_curve(&bits, 5).unwrap();
        assert!(pts[..100].iter().all(|&(r, p)| r == 0.0 && p == 0.0));
        assert_eq!(pts[104], (1.0, 5.0 / 105.0));
    }

    #[test]
    fn pr_curve_zero_positives_errors() {
        assert!(matches!(
            pr_curve(&[false, false], 0).unwrap_err(),
            Error::ZeroPositives
        ));
    }

    #[test]
    fn pr_precision_at_full_length_is_prevalence() {
        let bits = [true, false, false, true, false];
        let pts = pr_curve(&bits, 2).unwrap();
        assert!((pts.last().unwrap().1 - 2.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn f_measure_examples() {
        // Perfect prefix of all positives at k = total_positives.
        assert!((f_measure_at(&[true, true, false], 2, 2) - 1.0).abs() < 1e-12);
        // Zero hits in prefix.
        assert_eq!(f_measure_at(&[false, true], 1, 1), 0.0);
        // p = 1, r = 2/3 -> F = 0.8.
        assert!((f_measure_at(&[true, true, false, true], 2, 3) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn curve_set_summary() {
        let truth = [true, false, true];
        let lpr = [0.9, 0.5, 0.8];
        let cs = CurveSet::compute(&truth, &lpr).unwrap();
        assert_eq!(cs.hit_auc, 4);
        assert!((cs.eauc - 4.5).abs() < 1e-12);
        assert_eq!(cs.hit_curve, vec![(1, 1), (2, 1), (3, 2)]);
        // F at k=1: p=1, r=0.5 -> 2/3; k=3: p=2/3, r=1 -> 0.8.
        assert!((cs.max_f.0 - 0.8).abs() < 1e-12);
        assert_eq!(cs.max_f.1, 3);
    }

    #[test]
    fn descending_sort_maximizes_eauc_over_permutations() {
        use itertools::Itertools;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let len = rng.gen_range(1..=6);
            let xs: Vec<f64> = (0..len).map(|_| rng.gen::<f64>()).collect();
            let mut sorted = xs.clone();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let best = eauc(&sorted);
            for perm in xs.iter().copied().permutations(len) {
                assert!(eauc(&perm) <= best + 1e-12);
            }
        }
    }

    #[test]
    fn eauc_exact_matches_float_on_dyadics() {
        let xs = [0.5, 0.25, 0.75];
        let exact = eauc_exact(&xs);
        let expected = BigRational::from_float(eauc(&xs)).unwrap();
        assert_eq!(exact, expected);
    }

    #[test]
    fn averaged_pr_interpolates_between_points() {
        let curve = vec![(0.0, 1.0), (0.5, 0.5), (1.0, 0.25)];
        let avg = average_pr_curves(&[curve], 5);
        assert_eq!(avg[0], (0.0, 1.0));
        assert!((avg[1].1 - 0.75).abs() < 1e-12);
        assert!((avg[2].1 - 0.5).abs() < 1e-12);
        assert!((avg[4].1 - 0.25).abs() < 1e-12);
    }
}

//! Hierarchy-consistent eAUC-maximizing rankers.
//!
//! Four routes to the same ordering, used to cross-verify each other:
//!
//! * [`chain_merge`] / [`hier_lpr_naive`]: the reference algorithms, simple
//!   and deliberately cubic per sample;
//! * [`hier_lpr_fast`]: the block-level O(n log n) implementation;
//! * [`cssa_rank`]: supernode condensation, plus the budgeted
//!   [`cssa_relaxed`] variant;
//! * [`brute_force_optimal`]: exact subset-DP oracle for small forests.
//!
//! All rankers share one deterministic tie rule ([`TieBreak::HeadAsc`]) and
//! compare block means through exact `(sum, size)` cross-multiplication, so
//! their outputs are sequence-identical whenever block means are distinct
//! and eAUC-identical always.

mod blocks;
mod brute;
mod cssa;
mod fast;
mod naive;

pub use blocks::{agglomerate, breaking_points, is_mean_sorted, kway_merge, Block, TieBreak};
pub use brute::{brute_force_optimal, BruteForceResult, BRUTE_FORCE_MAX_NODES};
pub use cssa::{cssa_rank, cssa_relaxed, CssaRelaxedState};
pub use fast::hier_lpr_fast;
pub use naive::{chain_merge, hier_lpr_naive};

pub(crate) use blocks::kway_merge_keyed;
pub(crate) use cssa::cssa_rank_with_tie;
pub(crate) use fast::{block_data, hier_lpr_fast_with_tie, Seg};
pub(crate) use naive::hier_lpr_naive_with_tie;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{InstanceForest, LabelGraph, LabelRecord};
    use crate::metrics::{eauc, eauc_exact};

    fn label_records(k: usize) -> Vec<LabelRecord> {
        (0..k)
            .map(|id| LabelRecord {
                id,
                name: format!("L{id}"),
            })
            .collect()
    }

    /// Random forest with LPRs drawn from an exact dyadic pool, forcing ties
    /// that every float route resolves identically.
    fn random_tied_forest(rng: &mut impl rand::Rng) -> InstanceForest {
        let k = rng.gen_range(1..=9);
        let mut edges = Vec::new();
        for child in 1..k {
            if rng.gen_bool(0.6) {
                edges.push((child, rng.gen_range(0..child)));
            }
        }
        let g = LabelGraph::new(label_records(k), edges).unwrap();
        let lprs: Vec<f64> = (0..k)
            .map(|_| f64::from(rng.gen_range(0..=8u8)) / 8.0)
            .collect();
        InstanceForest::new(g, 1, lprs, None).unwrap()
    }

    #[test]
    fn all_rankers_agree_in_eauc_under_forced_ties() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(83);
        for _ in 0..300 {
            let f = random_tied_forest(&mut rng);
            let naive = hier_lpr_naive(&f);
            let fast = hier_lpr_fast(&f);
            let cssa = cssa_rank(&f);
            let exact = eauc_exact(&naive.lpr_in_order);
            assert_eq!(exact, eauc_exact(&fast.lpr_in_order));
            assert_eq!(exact, eauc_exact(&cssa.lpr_in_order));
        }
    }

    #[test]
    fn monotone_weight_dominance() {
        // Raising a single LPR never moves that node later in the output.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(89);
        for _ in 0..200 {
            let k = rng.gen_range(1..=8);
            let mut edges = Vec::new();
            for child in 1..k {
                if rng.gen_bool(0.6) {
                    edges.push((child, rng.gen_range(0..child)));
                }
            }
            let g = LabelGraph::new(label_records(k), edges).unwrap();
            let lprs: Vec<f64> = (0..k).map(|_| rng.gen()).collect();
            let f = InstanceForest::new(g.clone(), 1, lprs.clone(), None).unwrap();
            let before = hier_lpr_fast(&f);

            let target = rng.gen_range(0..k);
            let mut bumped = lprs;
            bumped[target] = (bumped[target] + rng.gen::<f64>() * (1.0 - bumped[target])).min(1.0);
            let f2 = InstanceForest::new(g, 1, bumped, None).unwrap();
            let after = hier_lpr_fast(&f2);
            assert!(after.positions[target] <= before.positions[target]);
        }
    }

    #[test]
    fn lemma_first_supernode_matches_first_chain_merge_prefix() {
        // On forests of pure chains, the first supernode cssa_rank emits is
        // exactly the first prefix chain_merge pops.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(101);
        for _ in 0..200 {
            let chains: usize = rng.gen_range(1..=4);
            let mut edges = Vec::new();
            let mut k = 0usize;
            let mut chain_nodes = Vec::new();
            for _ in 0..chains {
                let len = rng.gen_range(1..=4);
                let start = k;
                for i in 1..len {
                    edges.push((start + i, start + i - 1));
                }
                chain_nodes.push((start, len));
                k += len;
            }
            let g = LabelGraph::new(label_records(k), edges).unwrap();
            let lprs: Vec<f64> = (0..k).map(|_| rng.gen()).collect();
            let f = InstanceForest::new(g, 1, lprs, None).unwrap();

            let views: Vec<_> = chain_nodes
                .iter()
                .map(|&(start, _)| f.chain_view(start).unwrap())
                .collect();
            let merged = chain_merge(&views).unwrap();
            let first_prefix: Vec<usize> =
                merged.order[..merged.blocks[0].len].to_vec();

            let cssa = cssa_rank(&f);
            let first_supernode: Vec<usize> = cssa.order[..cssa.blocks[0].len].to_vec();
            assert_eq!(first_supernode, first_prefix);
        }
    }

    #[test]
    fn corrupted_tie_rule_changes_sequence_not_eauc() {
        // Singletons with duplicated values: the canonical rule emits ties
        // ascending by id, the corrupted rule descending; eAUC unchanged.
        let g = LabelGraph::new(label_records(4), vec![]).unwrap();
        let f = InstanceForest::new(g, 1, vec![0.5, 0.5, 0.9, 0.5], None).unwrap();
        let canonical = cssa_rank(&f);
        let corrupted = cssa_rank_with_tie(&f, TieBreak::HeadDesc);
        assert_eq!(canonical.order, vec![2, 0, 1, 3]);
        assert_eq!(corrupted.order, vec![2, 3, 1, 0]);
        assert_ne!(canonical.order, corrupted.order);
        assert!((eauc(&canonical.lpr_in_order) - eauc(&corrupted.lpr_in_order)).abs() < 1e-12);
    }
}

//! Cross-module property tests: ranker agreement, ordering validity, block
//! structure, and metric identities on randomized forests.

use proptest::prelude::*;

use hierlpr::hierarchy::{
    enumerate_topological_orderings, validate_ordering, InstanceForest, LabelGraph, LabelRecord,
};
use hierlpr::metrics::{eauc, eauc_exact, hit_auc};
use hierlpr::ranker::{
    breaking_points, brute_force_optimal, chain_merge, cssa_rank, hier_lpr_fast, hier_lpr_naive,
};

fn label_records(k: usize) -> Vec<LabelRecord> {
    (0..k)
        .map(|id| LabelRecord {
            id,
            name: format!("L{id}"),
        })
        .collect()
}

/// Forest strategy: parent choices below each node plus unit-interval LPRs.
fn forest_strategy(max_nodes: usize) -> impl Strategy<Value = InstanceForest> {
    (1..=max_nodes)
        .prop_flat_map(|k| {
            let edges = proptest::collection::vec(proptest::option::of(0..k), k.saturating_sub(1));
            let lprs = proptest::collection::vec(0.0f64..=1.0, k);
            (Just(k), edges, lprs)
        })
        .prop_map(|(k, parent_picks, lprs)| {
            let mut edges = Vec::new();
            for (child_minus_one, pick) in parent_picks.into_iter().enumerate() {
                let child = child_minus_one + 1;
                if let Some(parent) = pick {
                    edges.push((child, parent % child));
                }
            }
            let graph = LabelGraph::new(label_records(k), edges).expect("valid forest");
            InstanceForest::new(graph, 1, lprs, None).expect("valid LPRs")
        })
}

/// LPRs drawn from a dyadic pool, forcing exact mean ties.
fn tied_forest_strategy(max_nodes: usize) -> impl Strategy<Value = InstanceForest> {
    (1..=max_nodes)
        .prop_flat_map(|k| {
            let edges = proptest::collection::vec(proptest::option::of(0..k), k.saturating_sub(1));
            let lprs = proptest::collection::vec(0u8..=8, k);
            (Just(k), edges, lprs)
        })
        .prop_map(|(k, parent_picks, eighths)| {
            let mut edges = Vec::new();
            for (child_minus_one, pick) in parent_picks.into_iter().enumerate() {
                let child = child_minus_one + 1;
                if let Some(parent) = pick {
                    edges.push((child, parent % child));
                }
            }
            let graph = LabelGraph::new(label_records(k), edges).expect("valid forest");
            let lprs = eighths.into_iter().map(|e| f64::from(e) / 8.0).collect();
            InstanceForest::new(graph, 1, lprs, None).expect("valid LPRs")
        })
}

proptest! {
    /// The three rankers yield the same sequence on continuous draws and
    /// every output is hierarchy-consistent.
    #[test]
    fn rankers_agree_and_respect_hierarchy(forest in forest_strategy(10)) {
        let naive = hier_lpr_naive(&forest);
        let fast = hier_lpr_fast(&forest);
        let cssa = cssa_rank(&forest);
        prop_assert_eq!(&naive.order, &fast.order);
        prop_assert_eq!(&naive.order, &cssa.order);
        for order in [&naive.order, &fast.order, &cssa.order] {
            prop_assert!(validate_ordering(&forest, order).unwrap().is_consistent());
        }
    }

    /// The merge ranking attains the exhaustive optimum.
    #[test]
    fn naive_matches_brute_force(forest in forest_strategy(9)) {
        let naive = hier_lpr_naive(&forest);
        let brute = brute_force_optimal(&forest).unwrap();
        prop_assert!((eauc(&naive.lpr_in_order) - brute.eauc).abs() <= 1e-9);
        prop_assert!(validate_ordering(&forest, &brute.ranking.order).unwrap().is_consistent());
    }

    /// Under forced ties the sequences may differ but the exact rational
    /// eAUC never does.
    #[test]
    fn tie_invariant_eauc(forest in tied_forest_strategy(9)) {
        let naive = hier_lpr_naive(&forest);
        let fast = hier_lpr_fast(&forest);
        let cssa = cssa_rank(&forest);
        let reference = eauc_exact(&naive.lpr_in_order);
        prop_assert_eq!(&reference, &eauc_exact(&fast.lpr_in_order));
        prop_assert_eq!(&reference, &eauc_exact(&cssa.lpr_in_order));
    }

    /// Emitted blocks have nonincreasing means, every block suffix mean
    /// dominates the block mean, and re-partitioning the final output only
    /// coarsens the emitted boundaries.
    #[test]
    fn block_structure_invariants(forest in forest_strategy(10)) {
        let ranking = hier_lpr_fast(&forest);
        let means: Vec<f64> = ranking.blocks.iter().map(|b| b.mean_lpr()).collect();
        for pair in means.windows(2) {
            prop_assert!(pair[0] >= pair[1] - 1e-12);
        }
        for block in &ranking.blocks {
            let members = &ranking.lpr_in_order[block.start..block.start + block.len];
            let mean = block.sum_lpr / block.len as f64;
            for s in 0..members.len() {
                let suffix = &members[s..];
                let suffix_mean = suffix.iter().sum::<f64>() / suffix.len() as f64;
                prop_assert!(suffix_mean >= mean - 1e-9);
            }
        }
        let chain = hierlpr::hierarchy::ChainView::new(
            (0..ranking.len()).collect(),
            ranking.lpr_in_order.clone(),
        );
        let emitted: std::collections::BTreeSet<usize> =
            ranking.blocks.iter().map(|b| b.start + b.len).collect();
        for block in breaking_points(&chain) {
            let end = block.members()[block.members().len() - 1] + 1;
            prop_assert!(emitted.contains(&end));
        }
    }

    /// Chain merging preserves within-chain order and beats interleavings
    /// enumerated on small inputs.
    #[test]
    fn chain_merge_is_optimal_interleaving(
        lens in proptest::collection::vec(1usize..=3, 1..=3),
        raw in proptest::collection::vec(0.0f64..=1.0, 9),
    ) {
        let mut chains = Vec::new();
        let mut edges = Vec::new();
        let mut id = 0usize;
        for &len in &lens {
            for i in 1..len {
                edges.push((id + i, id + i - 1));
            }
            chains.push((id, len));
            id += len;
        }
        let k = id;
        let lprs: Vec<f64> = raw[..k].to_vec();
        let graph = LabelGraph::new(label_records(k), edges).unwrap();
        let forest = InstanceForest::new(graph, 1, lprs.clone(), None).unwrap();
        let views: Vec<_> = chains
            .iter()
            .map(|&(start, _)| forest.chain_view(start).unwrap())
            .collect();
        let merged = chain_merge(&views).unwrap();
        // Within-chain order preserved.
        for &(start, len) in &chains {
            let positions: Vec<usize> = (start..start + len)
                .map(|node| merged.order.iter().position(|&x| x == node).unwrap())
                .collect();
            prop_assert!(positions.windows(2).all(|w| w[0] < w[1]));
        }
        // Optimal among all hierarchy-consistent interleavings.
        let best = enumerate_topological_orderings(&forest, 100_000)
            .unwrap()
            .into_iter()
            .map(|order| {
                let vals: Vec<f64> = order.iter().map(|&i| lprs[i]).collect();
                eauc(&vals)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(eauc(&merged.lpr_in_order) >= best - 1e-9);
    }

    /// eAUC is positively homogeneous and matches hit_auc on bit vectors.
    #[test]
    fn eauc_identities(values in proptest::collection::vec(0.0f64..=1.0, 0..20), scale in 0.0f64..=1.0) {
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        prop_assert!((eauc(&scaled) - scale * eauc(&values)).abs() < 1e-9);
        let bits: Vec<bool> = values.iter().map(|&v| v > 0.5).collect();
        let as_floats: Vec<f64> = bits.iter().map(|&b| f64::from(u8::from(b))).collect();
        prop_assert_eq!(hit_auc(&bits) as f64, eauc(&as_floats));
    }
}

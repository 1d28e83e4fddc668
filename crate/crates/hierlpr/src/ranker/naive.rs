//! Reference ranking algorithms.
//!
//! `chain_merge` repeatedly removes the prefix sub-chain of maximal average
//! LPR across all remaining chains and appends it to the output.
//! `hier_lpr_naive` merges a forest bottom-up: it pops junction nodes whose
//! children all head pure chains, merges the child chains pairwise, and
//! replaces them with the merged chain, finishing with one final chain
//! merge. The argmax over prefix averages is recomputed from prefix sums on
//! every step, so the per-sample cost grows cubically with the tree size;
//! this implementation is the simple reference the fast ranker is checked
//! against.

use crate::error::{Error, Result};
use crate::hierarchy::{ChainView, InstanceForest, InstanceId, Ranking, RankedBlock};

use super::blocks::{mean_cmp, prefer, TieBreak};

/// Merge disjoint pure chains into the eAUC-maximal interleaving.
pub fn chain_merge(chains: &[ChainView]) -> Result<Ranking> {
    chain_merge_with_tie(chains, TieBreak::HeadAsc)
}

pub(crate) fn chain_merge_with_tie(chains: &[ChainView], tie: TieBreak) -> Result<Ranking> {
    if chains.is_empty() || chains.iter().all(|c| c.is_empty()) {
        return Err(Error::EmptyInput("chain_merge requires at least one node"));
    }
    let (order, lprs, blocks) = merge_chain_views(chains, tie);
    Ok(Ranking::from_parts(
        order,
        lprs,
        blocks,
        "chain-merge",
        tie.descriptor(),
    ))
}

/// Core of Algorithm 1: returns the merged order, its LPRs, and the popped
/// prefix blocks. Selection scans every remaining prefix each round.
fn merge_chain_views(
    chains: &[ChainView],
    tie: TieBreak,
) -> (Vec<InstanceId>, Vec<f64>, Vec<RankedBlock>) {
    struct Candidate {
        chain: usize,
        end: usize,
        sum: f64,
        size: usize,
        head: InstanceId,
    }

    let total: usize = chains.iter().map(ChainView::len).sum();
    let mut offsets = vec![0usize; chains.len()];
    let mut order = Vec::with_capacity(total);
    let mut lprs = Vec::with_capacity(total);
    let mut blocks = Vec::new();
    while order.len() < total {
        let mut best: Option<Candidate> = None;
        for (r, chain) in chains.iter().enumerate() {
            let start = offsets[r];
            if start == chain.len() {
                continue;
            }
            let head = chain.nodes()[start];
            // Best prefix of this chain; equal means take the longer prefix.
            let mut best_end = start + 1;
            let mut best_sum = chain.range_sum(start, best_end);
            for end in start + 2..=chain.len() {
                let sum = chain.range_sum(start, end);
                if mean_cmp(sum, end - start, best_sum, best_end - start)
                    != std::cmp::Ordering::Less
                {
                    best_end = end;
                    best_sum = sum;
                }
            }
            let candidate = Candidate {
                chain: r,
                end: best_end,
                sum: best_sum,
                size: best_end - start,
                head,
            };
            let replace = match &best {
                None => true,
                Some(b) => prefer(
                    tie,
                    candidate.sum,
                    candidate.size,
                    candidate.head,
                    b.sum,
                    b.size,
                    b.head,
                ),
            };
            if replace {
                best = Some(candidate);
            }
        }
        let best = best.expect("non-empty remainder");
        let (r, end) = (best.chain, best.end);
        let start = offsets[r];
        blocks.push(RankedBlock {
            start: order.len(),
            len: end - start,
            sum_lpr: best.sum,
        });
        order.extend_from_slice(&chains[r].nodes()[start..end]);
        lprs.extend_from_slice(&chains[r].lprs()[start..end]);
        offsets[r] = end;
    }
    (order, lprs, blocks)
}

/// Rank a forest by bottom-up junction merging (the reference algorithm).
/// The output maximizes eAUC over all hierarchy-consistent orderings.
pub fn hier_lpr_naive(forest: &InstanceForest) -> Ranking {
    hier_lpr_naive_with_tie(forest, TieBreak::HeadAsc)
}

pub(crate) fn hier_lpr_naive_with_tie(forest: &InstanceForest, tie: TieBreak) -> Ranking {
    let n = forest.len();
    if n == 0 {
        return Ranking::from_parts(Vec::new(), Vec::new(), Vec::new(), "hierlpr-naive", tie.descriptor());
    }
    // Mutable copy of the child structure; merging rewrites subtrees into
    // chains.
    let mut children: Vec<Vec<InstanceId>> = (0..n).map(|id| forest.child_instances(id)).collect();

    loop {
        let junctions = current_junctions(forest, &children);
        let Some(&v) = junctions.first() else { break };
        let kids = children[v].clone();
        // Merge all children pairwise until one chain remains, in child-id
        // order.
        let mut merged = collect_chain(kids[0], &children);
        for &c in &kids[1..] {
            let other = collect_chain(c, &children);
            let left = view_of(forest, merged);
            let right = view_of(forest, other);
            let (order, _, _) = merge_chain_views(&[left, right], tie);
            merged = order;
        }
        children[v] = vec![merged[0]];
        for w in merged.windows(2) {
            children[w[0]] = vec![w[1]];
        }
        children[*merged.last().expect("non-empty merge")] = Vec::new();
    }

    // All trees are now chains; one final merge across them.
    let chains: Vec<ChainView> = forest
        .root_instances()
        .into_iter()
        .map(|root| view_of(forest, collect_chain(root, &children)))
        .collect();
    let (order, lprs, blocks) = merge_chain_views(&chains, tie);
    Ranking::from_parts(order, lprs, blocks, "hierlpr-naive", tie.descriptor())
}

/// Junction nodes of the current (partially merged) structure, ascending.
/// `is_chain` must follow the rewired child links, so it is evaluated in
/// reverse preorder of the current forest (children before parents).
fn current_junctions(forest: &InstanceForest, children: &[Vec<InstanceId>]) -> Vec<InstanceId> {
    let n = forest.len();
    let mut preorder = Vec::with_capacity(n);
    let mut stack = forest.root_instances();
    while let Some(id) = stack.pop() {
        preorder.push(id);
        stack.extend_from_slice(&children[id]);
    }
    let mut is_chain = vec![false; n];
    for &id in preorder.iter().rev() {
        is_chain[id] = match children[id].as_slice() {
            [] => true,
            [c] => is_chain[*c],
            _ => false,
        };
    }
    (0..n)
        .filter(|&v| children[v].len() >= 2 && children[v].iter().all(|&c| is_chain[c]))
        .collect()
}

fn collect_chain(head: InstanceId, children: &[Vec<InstanceId>]) -> Vec<InstanceId> {
    let mut nodes = vec![head];
    let mut cur = head;
    while let [next] = children[cur].as_slice() {
        nodes.push(*next);
        cur = *next;
    }
    nodes
}

fn view_of(forest: &InstanceForest, nodes: Vec<InstanceId>) -> ChainView {
    let lprs = nodes.iter().map(|&id| forest.lpr(id)).collect();
    ChainView::new(nodes, lprs)
}

//! Block-level implementation of the hierarchy ranker.
//!
//! Each tree is decomposed once into maximal pure-chain segments. Segments
//! are partitioned into blocks, junctions are processed deepest-first by
//! k-way merging the children's block lists and agglomerating across the
//! junction, and the per-sample results meet in one final global k-way
//! merge. Blocks are spliced through an intrusive `next` array, so every
//! merge is O(1) and the whole ranking costs O(D n log K + n log M) for D
//! junction layers.
//!
//! Samples are independent: the per-sample stage runs in parallel and the
//! final merge is sequential and deterministic.

use rayon::prelude::*;

use crate::hierarchy::{InstanceForest, LabelGraph, LabelId, Ranking, RankedBlock};

use super::blocks::{block_boundaries, kway_merge_keyed, mean_cmp, MeanKeyed, TieBreak};

const NONE: usize = usize::MAX;

/// Internal block: a contiguous spliced segment addressed by head/tail.
/// `inner` is the position-weighted sum `sum_i i * lpr_i` over the block's
/// members (0-based within the block), maintained incrementally so a
/// block's eAUC contribution at any start position is `(n - p) * sum -
/// inner` without walking the members.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Seg {
    pub(crate) head: usize,
    pub(crate) tail: usize,
    pub(crate) size: usize,
    pub(crate) sum: f64,
    pub(crate) inner: f64,
}

impl MeanKeyed for Seg {
    fn key(&self) -> (f64, usize, usize) {
        (self.sum, self.size, self.head)
    }
}

/// Static per-graph decomposition shared by all samples.
struct Skeleton {
    /// Labels along each segment, top to bottom inclusive.
    segments: Vec<Vec<LabelId>>,
    /// Branching labels deepest-first, each with the segment ending at it
    /// and the segments headed by its children.
    schedule: Vec<(usize, Vec<usize>)>,
    /// Segments headed by roots.
    root_segments: Vec<usize>,
}

fn build_skeleton(graph: &LabelGraph) -> Skeleton {
    let k = graph.label_count();
    let mut depth = vec![0usize; k];
    let mut order: Vec<LabelId> = Vec::with_capacity(k);
    let mut stack: Vec<LabelId> = graph.roots().collect();
    while let Some(v) = stack.pop() {
        order.push(v);
        for &c in graph.children(v) {
            depth[c] = depth[v] + 1;
            stack.push(c);
        }
    }

    // Segment heads: roots and children of branching labels.
    let mut heads: Vec<LabelId> = graph.roots().collect();
    for v in 0..k {
        if graph.children(v).len() >= 2 {
            heads.extend_from_slice(graph.children(v));
        }
    }
    heads.sort_unstable();

    let mut segments = Vec::with_capacity(heads.len());
    let mut seg_ending_at = vec![NONE; k];
    let mut seg_headed_by = vec![NONE; k];
    for h in heads {
        let mut labels = vec![h];
        let mut cur = h;
        while let [only] = graph.children(cur) {
            labels.push(*only);
            cur = *only;
        }
        let seg_id = segments.len();
        seg_headed_by[h] = seg_id;
        if graph.children(cur).len() >= 2 {
            seg_ending_at[cur] = seg_id;
        }
        segments.push(labels);
    }

    let mut branching: Vec<LabelId> = (0..k).filter(|&v| graph.children(v).len() >= 2).collect();
    branching.sort_by_key(|&v| (std::cmp::Reverse(depth[v]), v));
    let schedule = branching
        .into_iter()
        .map(|v| {
            let child_segs = graph
                .children(v)
                .iter()
                .map(|&c| seg_headed_by[c])
                .collect();
            (seg_ending_at[v], child_segs)
        })
        .collect();
    let root_segments = graph.roots().map(|r| seg_headed_by[r]).collect();
    Skeleton {
        segments,
        schedule,
        root_segments,
    }
}

/// Per-sample result: block lists for the root segments (instance-id based)
/// plus the local splice links.
struct SampleBlocks {
    root_lists: Vec<Vec<Seg>>,
    next_local: Vec<usize>,
}

fn rank_sample(forest: &InstanceForest, skel: &Skeleton, sample: usize, tie: TieBreak) -> SampleBlocks {
    let k = forest.label_count();
    let base = sample * k;
    let lpr = &forest.lprs()[base..base + k];
    let mut next_local = vec![NONE; k];

    // Partition every segment once; work in local label indices.
    let mut seg_blocks: Vec<Vec<Seg>> = skel
        .segments
        .iter()
        .map(|labels| {
            for w in labels.windows(2) {
                next_local[w[0]] = w[1];
            }
            let values: Vec<f64> = labels.iter().map(|&l| lpr[l]).collect();
            let mut blocks = Vec::new();
            let mut start = 0;
            for end in block_boundaries(&values) {
                let slice = &values[start..end];
                blocks.push(Seg {
                    head: labels[start],
                    tail: labels[end - 1],
                    size: end - start,
                    sum: slice.iter().sum(),
                    inner: slice
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| i as f64 * v)
                        .sum(),
                });
                start = end;
            }
            blocks
        })
        .collect();

    for (own_seg, child_segs) in &skel.schedule {
        let lists: Vec<Vec<Seg>> = child_segs
            .iter()
            .map(|&s| std::mem::take(&mut seg_blocks[s]))
            .collect();
        let downstream = kway_merge_keyed(lists, tie);
        let upstream = std::mem::take(&mut seg_blocks[*own_seg]);
        seg_blocks[*own_seg] = agglomerate_segs(upstream, downstream, &mut next_local);
    }

    let root_lists = skel
        .root_segments
        .iter()
        .map(|&s| {
            seg_blocks[s]
                .iter()
                .map(|b| Seg {
                    head: base + b.head,
                    tail: base + b.tail,
                    size: b.size,
                    sum: b.sum,
                    inner: b.inner,
                })
                .collect()
        })
        .collect();
    SampleBlocks {
        root_lists,
        next_local,
    }
}

/// Per-tree block lists and splice links for a whole forest; the reusable
/// core behind both the fast ranker and the DAG split scorer.
pub(crate) struct BlockData {
    /// One nonincreasing block list per (sample, root segment).
    pub(crate) lists: Vec<Vec<Seg>>,
    /// Instance-indexed member links; `usize::MAX` terminates a block.
    pub(crate) next: Vec<usize>,
}

pub(crate) fn block_data(forest: &InstanceForest, tie: TieBreak) -> BlockData {
    let n = forest.len();
    let k = forest.label_count();
    let skel = build_skeleton(forest.graph());
    let per_sample: Vec<SampleBlocks> = (0..forest.sample_count())
        .into_par_iter()
        .map(|m| rank_sample(forest, &skel, m, tie))
        .collect();

    let mut next = vec![NONE; n];
    let mut lists: Vec<Vec<Seg>> = Vec::with_capacity(per_sample.len() * skel.root_segments.len());
    for (m, sample) in per_sample.into_iter().enumerate() {
        let base = m * k;
        for (local, &target) in sample.next_local.iter().enumerate() {
            if target != NONE {
                next[base + local] = base + target;
            }
        }
        lists.extend(sample.root_lists);
    }
    BlockData { lists, next }
}

fn agglomerate_segs(upstream: Vec<Seg>, downstream: Vec<Seg>, next: &mut [usize]) -> Vec<Seg> {
    let splice = |ahead: Seg, behind: Seg, next: &mut [usize]| {
        next[ahead.tail] = behind.head;
        Seg {
            head: ahead.head,
            tail: behind.tail,
            size: ahead.size + behind.size,
            sum: ahead.sum + behind.sum,
            inner: ahead.inner + behind.inner + ahead.size as f64 * behind.sum,
        }
    };
    let mut up = upstream;
    let mut down: std::collections::VecDeque<Seg> = downstream.into();
    let Some(mut b0) = down.pop_front() else {
        return up;
    };
    loop {
        if let Some(prev) = up.last() {
            if mean_cmp(b0.sum, b0.size, prev.sum, prev.size) == std::cmp::Ordering::Greater {
                let prev = up.pop().expect("checked non-empty");
                b0 = splice(prev, b0, next);
                continue;
            }
        }
        if let Some(nxt) = down.front() {
            if mean_cmp(nxt.sum, nxt.size, b0.sum, b0.size) == std::cmp::Ordering::Greater {
                let nxt = down.pop_front().expect("checked non-empty");
                b0 = splice(b0, nxt, next);
                continue;
            }
        }
        break;
    }
    up.push(b0);
    up.extend(down);
    up
}

/// Rank a forest at block level; same ordering as the reference algorithm
/// under the shared tie rule.
pub fn hier_lpr_fast(forest: &InstanceForest) -> Ranking {
    hier_lpr_fast_with_tie(forest, TieBreak::HeadAsc)
}

pub(crate) fn hier_lpr_fast_with_tie(forest: &InstanceForest, tie: TieBreak) -> Ranking {
    let n = forest.len();
    if n == 0 {
        return Ranking::from_parts(
            Vec::new(),
            Vec::new(),
            Vec::new(),
            "hierlpr-fast",
            tie.descriptor(),
        );
    }
    let data = block_data(forest, tie);
    let merged = kway_merge_keyed(data.lists, tie);

    let mut order = Vec::with_capacity(n);
    let mut lprs = Vec::with_capacity(n);
    let mut blocks = Vec::with_capacity(merged.len());
    for seg in merged {
        blocks.push(RankedBlock {
            start: order.len(),
            len: seg.size,
            sum_lpr: seg.sum,
        });
        let mut cur = seg.head;
        for _ in 0..seg.size {
            order.push(cur);
            lprs.push(forest.lpr(cur));
            cur = data.next[cur];
        }
    }
    Ranking::from_parts(order, lprs, blocks, "hierlpr-fast", tie.descriptor())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{validate_ordering, InstanceForest, LabelGraph, LabelRecord};
    use crate::metrics::eauc;
    use crate::ranker::naive::hier_lpr_naive;

    fn graph(k: usize, edges: Vec<(usize, usize)>) -> LabelGraph {
        let labels = (0..k)
            .map(|id| LabelRecord {
                id,
                name: format!("L{id}"),
            })
            .collect();
        LabelGraph::new(labels, edges).unwrap()
    }

    #[test]
    fn fast_worked_micro_example() {
        let g = graph(4, vec![(1, 0), (2, 0)]);
        let f = InstanceForest::new(g, 1, vec![0.2, 0.9, 0.7, 0.65], None).unwrap();
        let r = hier_lpr_fast(&f);
        assert_eq!(r.order, vec![3, 0, 1, 2]);
        assert!((eauc(&r.lpr_in_order) - 5.7).abs() < 1e-12);
        // Two blocks: the singleton 0.65 and the pooled tree.
        assert_eq!(r.blocks.len(), 2);
        assert_eq!(r.blocks[1].len, 3);
        assert!((r.blocks[1].mean_lpr() - (0.2 + 0.9 + 0.7) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fast_emits_blocks_in_descending_mean_order() {
        // Two trees: a six-node chain that partitions into two blocks, and a
        // five-node tree whose junction merges two child chains.
        let chain = graph(6, vec![(1, 0), (2, 1), (3, 2), (4, 3), (5, 4)]);
        let f1 = InstanceForest::new(chain, 1, vec![0.5, 0.9, 0.1, 0.15, 0.2, 0.25], None).unwrap();
        let r1 = hier_lpr_fast(&f1);
        assert!(r1
            .blocks
            .windows(2)
            .all(|w| w[0].mean_lpr() >= w[1].mean_lpr() - 1e-15));

        let tree = graph(5, vec![(1, 0), (2, 0), (3, 1), (4, 2)]);
        let f2 = InstanceForest::new(tree, 2, vec![
            0.3, 0.8, 0.6, 0.2, 0.9, // sample 0
            0.7, 0.1, 0.5, 0.4, 0.35, // sample 1
        ], None).unwrap();
        let r2 = hier_lpr_fast(&f2);
        assert!(r2
            .blocks
            .windows(2)
            .all(|w| w[0].mean_lpr() >= w[1].mean_lpr() - 1e-15));
        assert!(validate_ordering(&f2, &r2.order).unwrap().is_consistent());
    }

    #[test]
    fn fast_matches_naive_on_random_forests() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(97);
        for _ in 0..300 {
            let k = rng.gen_range(1..=8);
            let samples = rng.gen_range(1..=3);
            let mut edges = Vec::new();
            for child in 1..k {
                if rng.gen_bool(0.7) {
                    edges.push((child, rng.gen_range(0..child)));
                }
            }
            let g = graph(k, edges);
            let lprs: Vec<f64> = (0..k * samples).map(|_| rng.gen()).collect();
            let f = InstanceForest::new(g, samples, lprs, None).unwrap();
            let fast = hier_lpr_fast(&f);
            let naive = hier_lpr_naive(&f);
            assert_eq!(fast.order, naive.order, "forest: {:?}", f.graph().edges());
            assert!(validate_ordering(&f, &fast.order).unwrap().is_consistent());
        }
    }

    #[test]
    fn fast_blocks_never_split_on_reordering() {
        // Re-running the partition over the final output may only coarsen
        // the emitted block boundaries.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(131);
        for _ in 0..100 {
            let k = rng.gen_range(1..=10);
            let mut edges = Vec::new();
            for child in 1..k {
                if rng.gen_bool(0.6) {
                    edges.push((child, rng.gen_range(0..child)));
                }
            }
            let g = graph(k, edges);
            let lprs: Vec<f64> = (0..k).map(|_| rng.gen()).collect();
            let f = InstanceForest::new(g, 1, lprs, None).unwrap();
            let r = hier_lpr_fast(&f);
            let emitted: std::collections::BTreeSet<usize> =
                r.blocks.iter().map(|b| b.start + b.len).collect();
            let recomputed = block_boundaries(&r.lpr_in_order);
            for end in recomputed {
                assert!(emitted.contains(&end));
            }
        }
    }

    #[test]
    fn fast_on_singletons_is_descending_sort() {
        let g = graph(5, vec![]);
        let f = InstanceForest::new(g, 1, vec![0.3, 0.9, 0.1, 0.7, 0.5], None).unwrap();
        let r = hier_lpr_fast(&f);
        assert_eq!(r.order, vec![1, 3, 4, 0, 2]);
    }
}

//! Block machinery shared by the rankers: the maximal-prefix-average
//! partition of a chain, block agglomeration, and the k-way merge of block
//! lists.
//!
//! Block means are never compared through the division `sum / size`.
//! Comparisons cross-multiply the exact `(sum, size)` pairs so that all
//! rankers resolve the same comparison the same way.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::hierarchy::{ChainView, InstanceId};

/// Deterministic rule applied when two candidates have exactly equal mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    /// Canonical: prefer the block whose head has the smaller instance id.
    HeadAsc,
    /// Reversed rule, exposed only for fault-injection diagnostics.
    HeadDesc,
}

impl TieBreak {
    pub fn descriptor(self) -> &'static str {
        match self {
            TieBreak::HeadAsc => "mean-desc,head-id-asc,prefix-longest",
            TieBreak::HeadDesc => "mean-desc,head-id-desc,prefix-longest",
        }
    }
}

/// Compare two means given as `(sum, size)` pairs without dividing:
/// `sum_a / size_a  <=>  sum_b / size_b`.
#[inline]
pub(crate) fn mean_cmp(sum_a: f64, size_a: usize, sum_b: f64, size_b: usize) -> Ordering {
    (sum_a * size_b as f64)
        .partial_cmp(&(sum_b * size_a as f64))
        .expect("block sums are finite")
}

/// True when candidate `a` is strictly preferred over `b`: larger mean, or
/// equal mean resolved by the tie rule on head ids.
#[inline]
pub(crate) fn prefer(
    tie: TieBreak,
    sum_a: f64,
    size_a: usize,
    head_a: InstanceId,
    sum_b: f64,
    size_b: usize,
    head_b: InstanceId,
) -> bool {
    match mean_cmp(sum_a, size_a, sum_b, size_b) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => match tie {
            TieBreak::HeadAsc => head_a < head_b,
            TieBreak::HeadDesc => head_a > head_b,
        },
    }
}

/// End indices (exclusive, ascending) of the maximal-prefix-average
/// partition of `lprs`. Within one chain, ties on the maximal average go to
/// the longest prefix, which collapses equal-mean candidates into one block.
///
/// Implemented as pool-adjacent-violators over a block stack: a new element
/// pools backwards while its running block mean is at least the mean of the
/// block before it. The resulting level sets are exactly the sequential
/// maximal-prefix-average blocks (checked against the literal greedy scan in
/// the tests), in linear time.
pub(crate) fn block_boundaries(lprs: &[f64]) -> Vec<usize> {
    // (end_exclusive, sum, size); starts are implied by the previous entry.
    let mut stack: Vec<(usize, f64, usize)> = Vec::new();
    for (i, &v) in lprs.iter().enumerate() {
        let mut sum = v;
        let mut size = 1usize;
        while let Some(&(_, prev_sum, prev_size)) = stack.last() {
            if mean_cmp(sum, size, prev_sum, prev_size) != Ordering::Less {
                stack.pop();
                sum += prev_sum;
                size += prev_size;
            } else {
                break;
            }
        }
        stack.push((i + 1, sum, size));
    }
    stack.into_iter().map(|(end, _, _)| end).collect()
}

/// A contiguous chain segment carrying its member nodes and exact
/// `(sum, size)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    members: Vec<InstanceId>,
    sum_lpr: f64,
}

impl Block {
    pub fn new(members: Vec<InstanceId>, sum_lpr: f64) -> Self {
        assert!(!members.is_empty(), "blocks are never empty");
        Self { members, sum_lpr }
    }

    pub fn head(&self) -> InstanceId {
        self.members[0]
    }

    pub fn members(&self) -> &[InstanceId] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn sum_lpr(&self) -> f64 {
        self.sum_lpr
    }

    pub fn mean_lpr(&self) -> f64 {
        self.sum_lpr / self.size() as f64
    }

    fn absorb(&mut self, later: Block) {
        self.members.extend(later.members);
        self.sum_lpr += later.sum_lpr;
    }
}

/// Greedy maximal-prefix-average partition of a chain into blocks with
/// strictly decreasing means.
pub fn breaking_points(chain: &ChainView) -> Vec<Block> {
    let bounds = block_boundaries(chain.lprs());
    let mut blocks = Vec::with_capacity(bounds.len());
    let mut start = 0;
    for end in bounds {
        blocks.push(Block::new(
            chain.nodes()[start..end].to_vec(),
            chain.range_sum(start, end),
        ));
        start = end;
    }
    blocks
}

/// Merge the junction between an upstream block list and the block list of
/// its merged child chain: while the first downstream block beats the block
/// above it, or the block after it beats it, pool them. Both inputs must be
/// internally nonincreasing in mean; the result is nonincreasing.
pub fn agglomerate(upstream: Vec<Block>, downstream: Vec<Block>) -> Vec<Block> {
    let mut up = upstream;
    let mut down: std::collections::VecDeque<Block> = downstream.into();
    let Some(mut b0) = down.pop_front() else {
        return up;
    };
    loop {
        if let Some(prev) = up.last() {
            if mean_cmp(b0.sum_lpr, b0.size(), prev.sum_lpr, prev.size()) == Ordering::Greater {
                let mut prev = up.pop().expect("checked non-empty");
                prev.absorb(b0);
                b0 = prev;
                continue;
            }
        }
        if let Some(next) = down.front() {
            if mean_cmp(next.sum_lpr, next.size(), b0.sum_lpr, b0.size()) == Ordering::Greater {
                let next = down.pop_front().expect("checked non-empty");
                b0.absorb(next);
                continue;
            }
        }
        break;
    }
    up.push(b0);
    up.extend(down);
    up
}

/// True when block means are nonincreasing along the list.
pub fn is_mean_sorted(blocks: &[Block]) -> bool {
    blocks.windows(2).all(|w| {
        mean_cmp(w[0].sum_lpr, w[0].size(), w[1].sum_lpr, w[1].size()) != Ordering::Less
    })
}

/// Key exposed by anything mergeable by descending block mean.
pub(crate) trait MeanKeyed {
    fn key(&self) -> (f64, usize, InstanceId);
}

impl MeanKeyed for Block {
    fn key(&self) -> (f64, usize, InstanceId) {
        (self.sum_lpr, self.size(), self.head())
    }
}

/// K-way merge of block lists by descending mean under the tie rule. Each
/// input list must already be nonincreasing in mean.
pub fn kway_merge(lists: Vec<Vec<Block>>, tie: TieBreak) -> Vec<Block> {
    kway_merge_keyed(lists, tie)
}

pub(crate) fn kway_merge_keyed<T: MeanKeyed>(lists: Vec<Vec<T>>, tie: TieBreak) -> Vec<T> {
    struct Entry {
        sum: f64,
        size: usize,
        head: InstanceId,
        list: usize,
        tie: TieBreak,
    }
    impl PartialEq for Entry {
        fn eq(&self, other: &Self) -> bool {
            self.cmp(other) == Ordering::Equal
        }
    }
    impl Eq for Entry {}
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> Ordering {
            // Max-heap: the preferred entry must compare greater.
            if prefer(
                self.tie, self.sum, self.size, self.head, other.sum, other.size, other.head,
            ) {
                Ordering::Greater
            } else if prefer(
                self.tie, other.sum, other.size, other.head, self.sum, self.size, self.head,
            ) {
                Ordering::Less
            } else {
                Ordering::Equal
            }
        }
    }

    let total: usize = lists.iter().map(Vec::len).sum();
    let mut cursors: Vec<std::vec::IntoIter<T>> = lists.into_iter().map(Vec::into_iter).collect();
    let mut heap = BinaryHeap::with_capacity(cursors.len());
    let mut pending: Vec<Option<T>> = Vec::with_capacity(cursors.len());
    for (idx, cur) in cursors.iter_mut().enumerate() {
        let block = cur.next();
        if let Some(b) = &block {
            let (sum, size, head) = b.key();
            heap.push(Entry {
                sum,
                size,
                head,
                list: idx,
                tie,
            });
        }
        pending.push(block);
    }
    let mut out = Vec::with_capacity(total);
    while let Some(entry) = heap.pop() {
        let block = pending[entry.list].take().expect("entry implies pending");
        out.push(block);
        if let Some(b) = cursors[entry.list].next() {
            let (sum, size, head) = b.key();
            heap.push(Entry {
                sum,
                size,
                head,
                list: entry.list,
                tie,
            });
            pending[entry.list] = Some(b);
        }
    }
    out
}

//! Supernode condensation ranker and its budgeted relaxation.
//!
//! `cssa_rank` repeatedly takes the supernode of maximal mean: if it has no
//! live parent it is taken off the graph and appended to the output,
//! otherwise it condenses with the supernode holding its parent node. The
//! emitted supernodes coincide with the fast ranker's blocks, and the
//! ordering equals the reference algorithm's under the shared tie rule.
//!
//! `cssa_relaxed` runs the same condensation under a selection budget `L`,
//! assigning each selected supernode a weight of 1 except possibly the last
//! one, which receives the fractional remainder `(L - gamma) / n(S_i)`.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::hierarchy::{InstanceForest, InstanceId, Ranking, RankedBlock};

use super::blocks::{prefer, TieBreak};

const NONE: usize = usize::MAX;

/// One live supernode: a spliced member list with its exact (sum, size).
#[derive(Debug, Clone, Copy)]
struct Super {
    head: usize,
    tail: usize,
    size: usize,
    sum: f64,
    /// Bumped on every mutation; stale heap entries are skipped.
    generation: u32,
}

struct Condensation {
    supers: Vec<Super>,
    /// Union-find over supernode slots (a node's initial slot is its id).
    slot_parent: Vec<usize>,
    next: Vec<usize>,
    emitted: Vec<bool>,
}

struct HeapEntry {
    sum: f64,
    size: usize,
    head: InstanceId,
    slot: usize,
    generation: u32,
    tie: TieBreak,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        if prefer(
            self.tie, self.sum, self.size, self.head, other.sum, other.size, other.head,
        ) {
            std::cmp::Ordering::Greater
        } else if prefer(
            self.tie, other.sum, other.size, other.head, self.sum, self.size, self.head,
        ) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Equal
        }
    }
}

impl Condensation {
    fn new(forest: &InstanceForest) -> Self {
        let n = forest.len();
        Self {
            supers: (0..n)
                .map(|id| Super {
                    head: id,
                    tail: id,
                    size: 1,
                    sum: forest.lpr(id),
                    generation: 0,
                })
                .collect(),
            slot_parent: (0..n).collect(),
            next: vec![NONE; n],
            emitted: vec![false; n],
        }
    }

    fn find(&mut self, slot: usize) -> usize {
        let mut root = slot;
        while self.slot_parent[root] != root {
            root = self.slot_parent[root];
        }
        let mut cur = slot;
        while self.slot_parent[cur] != root {
            let up = self.slot_parent[cur];
            self.slot_parent[cur] = root;
            cur = up;
        }
        root
    }

    fn entry(&self, slot: usize, tie: TieBreak) -> HeapEntry {
        let s = &self.supers[slot];
        HeapEntry {
            sum: s.sum,
            size: s.size,
            head: s.head,
            slot,
            generation: s.generation,
            tie,
        }
    }

    /// Live parent supernode of the slot's top node, if any.
    fn parent_slot(&mut self, forest: &InstanceForest, slot: usize) -> Option<usize> {
        let top = self.supers[slot].head;
        forest
            .parent_instance(top)
            .filter(|&p| !self.emitted[p])
            .map(|p| self.find(p))
    }

    /// Condense `child` into `parent`: parent members first, child appended.
    fn condense(&mut self, child: usize, parent: usize) -> usize {
        let c = self.supers[child];
        let p = self.supers[parent];
        self.next[p.tail] = c.head;
        self.supers[parent] = Super {
            head: p.head,
            tail: c.tail,
            size: p.size + c.size,
            sum: p.sum + c.sum,
            generation: p.generation + 1,
        };
        self.slot_parent[child] = parent;
        parent
    }

    fn members(&self, slot: usize) -> Vec<InstanceId> {
        let s = &self.supers[slot];
        let mut out = Vec::with_capacity(s.size);
        let mut cur = s.head;
        for _ in 0..s.size {
            out.push(cur);
            cur = self.next[cur];
        }
        out
    }
}

/// Rank a forest by supernode condensation.
pub fn cssa_rank(forest: &InstanceForest) -> Ranking {
    cssa_rank_with_tie(forest, TieBreak::HeadAsc)
}

pub(crate) fn cssa_rank_with_tie(forest: &InstanceForest, tie: TieBreak) -> Ranking {
    let n = forest.len();
    let mut state = Condensation::new(forest);
    let mut heap: BinaryHeap<HeapEntry> = (0..n).map(|slot| state.entry(slot, tie)).collect();
    let mut order = Vec::with_capacity(n);
    let mut lprs = Vec::with_capacity(n);
    let mut blocks = Vec::new();
    while order.len() < n {
        let entry = heap.pop().expect("heap not exhausted before output");
        if state.find(entry.slot) != entry.slot
            || state.supers[entry.slot].generation != entry.generation
        {
            continue;
        }
        match state.parent_slot(forest, entry.slot) {
            None => {
                let members = state.members(entry.slot);
                blocks.push(RankedBlock {
                    start: order.len(),
                    len: members.len(),
                    sum_lpr: state.supers[entry.slot].sum,
                });
                for id in members {
                    state.emitted[id] = true;
                    lprs.push(forest.lpr(id));
                    order.push(id);
                }
            }
            Some(parent) => {
                let merged = state.condense(entry.slot, parent);
                let new_entry = state.entry(merged, tie);
                heap.push(new_entry);
            }
        }
    }
    Ranking::from_parts(order, lprs, blocks, "cssa", tie.descriptor())
}

/// Budgeted selection state: per-node weights, the running count, and the
/// budget.
#[derive(Debug, Clone)]
pub struct CssaRelaxedState {
    /// Selection weight per instance, in [0, 1].
    pub psi: Vec<f64>,
    /// Total node count consumed by selections.
    pub gamma: usize,
    pub budget: usize,
}

impl CssaRelaxedState {
    /// Instances with a fractional weight (the last selected supernode when
    /// the budget did not cover it fully).
    pub fn fractional(&self) -> Vec<InstanceId> {
        self.psi
            .iter()
            .enumerate()
            .filter(|&(_, &w)| w > 0.0 && w < 1.0)
            .map(|(id, _)| id)
            .collect()
    }
}

/// Run the condensation under a selection budget of `L` nodes. Supernodes
/// whose parent is fully selected (or absent) receive
/// `min(1, (L - gamma) / n(S_i))`; the loop stops once `gamma` reaches `L`.
pub fn cssa_relaxed(forest: &InstanceForest, budget: usize) -> Result<CssaRelaxedState> {
    cssa_relaxed_with_tie(forest, budget, TieBreak::HeadAsc)
}

pub(crate) fn cssa_relaxed_with_tie(
    forest: &InstanceForest,
    budget: usize,
    tie: TieBreak,
) -> Result<CssaRelaxedState> {
    let n = forest.len();
    if budget < 1 || budget > n {
        return Err(Error::Budget { budget, n });
    }
    let mut state = Condensation::new(forest);
    let mut heap: BinaryHeap<HeapEntry> = (0..n).map(|slot| state.entry(slot, tie)).collect();
    let mut psi = vec![0.0f64; n];
    let mut gamma = 0usize;
    while gamma < budget {
        let entry = heap.pop().expect("budget <= n keeps work available");
        if state.find(entry.slot) != entry.slot
            || state.supers[entry.slot].generation != entry.generation
        {
            continue;
        }
        let parent_selected = match forest.parent_instance(state.supers[entry.slot].head) {
            None => true,
            Some(p) => psi[p] == 1.0,
        };
        if parent_selected {
            let size = state.supers[entry.slot].size;
            let weight = (budget - gamma) as f64 / size as f64;
            let weight = weight.min(1.0);
            for id in state.members(entry.slot) {
                psi[id] = weight;
                state.emitted[id] = true;
            }
            gamma += size;
        } else {
            let parent = state
                .parent_slot(forest, entry.slot)
                .expect("unselected parent is live");
            let merged = state.condense(entry.slot, parent);
            let new_entry = state.entry(merged, tie);
            heap.push(new_entry);
        }
    }
    Ok(CssaRelaxedState {
        psi,
        gamma,
        budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{InstanceForest, LabelGraph, LabelRecord};

    fn forest(k: usize, edges: Vec<(usize, usize)>, lprs: Vec<f64>) -> InstanceForest {
        let labels = (0..k)
            .map(|id| LabelRecord {
                id,
                name: format!("L{id}"),
            })
            .collect();
        InstanceForest::new(LabelGraph::new(labels, edges).unwrap(), 1, lprs, None).unwrap()
    }

    #[test]
    fn ascending_chain_condenses_then_emits() {
        let f = forest(2, vec![(1, 0)], vec![0.4, 0.9]);
        let r = cssa_rank(&f);
        assert_eq!(r.order, vec![0, 1]);
        assert_eq!(r.blocks.len(), 1);
        assert!((r.blocks[0].mean_lpr() - 0.65).abs() < 1e-12);
    }

    #[test]
    fn singleton_forest_sorts_descending() {
        let f = forest(4, vec![], vec![0.3, 0.9, 0.1, 0.7]);
        let r = cssa_rank(&f);
        assert_eq!(r.order, vec![1, 3, 0, 2]);
    }

    #[test]
    fn matches_naive_on_random_forests() {
        use crate::ranker::naive::hier_lpr_naive;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(53);
        for _ in 0..1000 {
            let k = rng.gen_range(1..=10);
            let mut edges = Vec::new();
            for child in 1..k {
                if rng.gen_bool(0.7) {
                    edges.push((child, rng.gen_range(0..child)));
                }
            }
            let labels = (0..k)
                .map(|id| LabelRecord {
                    id,
                    name: format!("L{id}"),
                })
                .collect();
            let g = LabelGraph::new(labels, edges).unwrap();
            let lprs: Vec<f64> = (0..k).map(|_| rng.gen()).collect();
            let f = InstanceForest::new(g, 1, lprs, None).unwrap();
            assert_eq!(cssa_rank(&f).order, hier_lpr_naive(&f).order);
        }
    }

    #[test]
    fn relaxed_full_budget_selects_everything() {
        let f = forest(2, vec![(1, 0)], vec![0.4, 0.9]);
        let state = cssa_relaxed(&f, 2).unwrap();
        assert_eq!(state.psi, vec![1.0, 1.0]);
        assert_eq!(state.gamma, 2);
    }

    #[test]
    fn relaxed_fractional_tail_on_condensed_supernode() {
        // Budget 1 against the condensed size-2 supernode of [0.4, 0.9].
        let f = forest(2, vec![(1, 0)], vec![0.4, 0.9]);
        let state = cssa_relaxed(&f, 1).unwrap();
        assert_eq!(state.psi, vec![0.5, 0.5]);
        assert_eq!(state.fractional(), vec![0, 1]);
        assert_eq!(state.gamma, 2);
    }

    #[test]
    fn relaxed_budget_one_on_singletons_selects_max() {
        let f = forest(3, vec![], vec![0.3, 0.9, 0.1]);
        let state = cssa_relaxed(&f, 1).unwrap();
        assert_eq!(state.psi, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn relaxed_budget_bounds_checked() {
        let f = forest(2, vec![(1, 0)], vec![0.4, 0.9]);
        assert!(matches!(
            cssa_relaxed(&f, 0).unwrap_err(),
            Error::Budget { .. }
        ));
        assert!(matches!(
            cssa_relaxed(&f, 3).unwrap_err(),
            Error::Budget { .. }
        ));
    }

    #[test]
    fn relaxed_psi_is_hierarchy_nonincreasing_and_bounded() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(59);
        for _ in 0..200 {
            let k = rng.gen_range(1..=8);
            let mut edges = Vec::new();
            for child in 1..k {
                if rng.gen_bool(0.6) {
                    edges.push((child, rng.gen_range(0..child)));
                }
            }
            let labels = (0..k)
                .map(|id| LabelRecord {
                    id,
                    name: format!("L{id}"),
                })
                .collect();
            let g = LabelGraph::new(labels, edges).unwrap();
            let lprs: Vec<f64> = (0..k).map(|_| rng.gen()).collect();
            let f = InstanceForest::new(g, 1, lprs, None).unwrap();
            let budget = rng.gen_range(1..=k);
            let state = cssa_relaxed(&f, budget).unwrap();
            for id in 0..f.len() {
                if let Some(p) = f.parent_instance(id) {
                    assert!(state.psi[id] <= state.psi[p] + 1e-12);
                }
            }
            let total: f64 = state.psi.iter().sum();
            assert!(total <= budget as f64 + 1e-9);
        }
    }

    #[test]
    fn relaxed_full_selection_prefix_matches_rank_order() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        for _ in 0..200 {
            let k = rng.gen_range(1..=8);
            let mut edges = Vec::new();
            for child in 1..k {
                if rng.gen_bool(0.6) {
                    edges.push((child, rng.gen_range(0..child)));
                }
            }
            let labels = (0..k)
                .map(|id| LabelRecord {
                    id,
                    name: format!("L{id}"),
                })
                .collect();
            let g = LabelGraph::new(labels, edges).unwrap();
            let lprs: Vec<f64> = (0..k).map(|_| rng.gen()).collect();
            let f = InstanceForest::new(g, 1, lprs, None).unwrap();
            let budget = rng.gen_range(1..=k);
            let state = cssa_relaxed(&f, budget).unwrap();
            let ranking = cssa_rank(&f);
            // Fully selected nodes form a prefix of the ranking.
            let full: std::collections::BTreeSet<usize> = (0..f.len())
                .filter(|&id| state.psi[id] == 1.0)
                .collect();
            let prefix: std::collections::BTreeSet<usize> =
                ranking.order[..full.len()].iter().copied().collect();
            assert_eq!(full, prefix);
        }
    }
}

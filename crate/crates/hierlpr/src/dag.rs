//! Tree-like DAG handling: enumerate the forests obtained by keeping one
//! parent edge per multi-parent label, rank each, and keep the ranking with
//! the highest eAUC.
//!
//! Splits are resolved per connected component, so the enumeration cost is
//! the product of the per-component counts, and block lists computed for
//! one component assignment are memoized and reused across the full splits
//! that share it.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::hierarchy::{InstanceForest, LabelGraph, LabelId, Ranking};
use crate::metrics::eauc;
use crate::ranker::{block_data, cssa_rank, hier_lpr_fast, hier_lpr_naive, kway_merge_keyed, Seg, TieBreak};

/// Default cap on the number of enumerated splits.
pub const DEFAULT_SPLIT_CAP: u128 = 4096;

/// Ranking algorithm selector shared with the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankAlgo {
    Naive,
    Fast,
    Cssa,
}

impl RankAlgo {
    pub fn rank(self, forest: &InstanceForest) -> Ranking {
        match self {
            RankAlgo::Naive => hier_lpr_naive(forest),
            RankAlgo::Fast => hier_lpr_fast(forest),
            RankAlgo::Cssa => cssa_rank(forest),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RankAlgo::Naive => "naive",
            RankAlgo::Fast => "fast",
            RankAlgo::Cssa => "cssa",
        }
    }
}

/// One parent choice per multi-parent label, in ascending label order; each
/// entry indexes into that label's sorted parent list.
pub type ParentAssignment = Vec<usize>;

/// Lazy enumeration of all parent-assignment splits of a tree-like DAG.
#[derive(Debug, Clone)]
pub struct SplitEnumeration {
    /// Multi-parent labels, ascending.
    pub multi_parent_labels: Vec<LabelId>,
    /// Parent-count (choice radix) per multi-parent label.
    pub radices: Vec<usize>,
    /// Total number of splits: the product of the radices.
    pub count: u128,
}

impl SplitEnumeration {
    /// Assignment vectors in lexicographic order.
    pub fn assignments(&self) -> impl Iterator<Item = ParentAssignment> + '_ {
        let radices = self.radices.clone();
        let count = self.count as usize;
        (0..count).map(move |mut idx| {
            let mut assignment = vec![0usize; radices.len()];
            for slot in (0..radices.len()).rev() {
                assignment[slot] = idx % radices[slot];
                idx /= radices[slot];
            }
            assignment
        })
    }
}

/// Enumerate the forests obtained by keeping exactly one parent edge per
/// multi-parent label. A forest input has exactly one (empty) assignment.
pub fn enumerate_splits(graph: &LabelGraph, cap: u128) -> Result<SplitEnumeration> {
    let multi_parent_labels = graph.multi_parent_labels();
    let radices: Vec<usize> = multi_parent_labels
        .iter()
        .map(|&v| graph.parents(v).len())
        .collect();
    let count = radices.iter().fold(1u128, |acc, &r| acc * r as u128);
    if count > cap {
        return Err(Error::SplitCapExceeded { count, cap });
    }
    Ok(SplitEnumeration {
        multi_parent_labels,
        radices,
        count,
    })
}

/// Materialize the forest for one parent assignment.
pub fn apply_split(graph: &LabelGraph, assignment: &ParentAssignment) -> Result<LabelGraph> {
    let multi = graph.multi_parent_labels();
    assert_eq!(multi.len(), assignment.len());
    let chosen: HashMap<LabelId, LabelId> = multi
        .iter()
        .zip(assignment)
        .map(|(&v, &pick)| (v, graph.parents(v)[pick]))
        .collect();
    let edges: Vec<(LabelId, LabelId)> = graph
        .edges()
        .iter()
        .copied()
        .filter(|&(child, parent)| match chosen.get(&child) {
            Some(&keep) => parent == keep,
            None => true,
        })
        .collect();
    LabelGraph::new(graph.labels().to_vec(), edges)
}

/// Result of ranking a tree-like DAG through split enumeration.
#[derive(Debug, Clone)]
pub struct DagRanking {
    pub ranking: Ranking,
    pub eauc: f64,
    /// Winning parent choice per multi-parent label (indexes the sorted
    /// parent list), empty for forest inputs.
    pub assignment: ParentAssignment,
    /// The multi-parent labels the assignment refers to.
    pub multi_parent_labels: Vec<LabelId>,
    /// Diagnostic only: (descendant, skipped_parent) pairs where the chosen
    /// ranking places an instance before one of its non-chosen original
    /// parents. The split rule does not enforce AND-semantics over all
    /// original parents.
    pub and_violations: Vec<(usize, usize)>,
}

/// Rank a (possibly multi-parent) label graph: enumerate splits, rank each,
/// and return the maximal-eAUC result. Ties pick the lexicographically
/// smallest assignment.
///
/// With the fast algorithm, block lists are computed per connected
/// component and memoized by the assignment restricted to that component,
/// so each component assignment is reduced to blocks once; each full split
/// then only pays for its global merge. The naive and cssa algorithms rank
/// every split from scratch.
pub fn rank_dag(
    graph: &LabelGraph,
    sample_count: usize,
    lpr: &[f64],
    algo: RankAlgo,
    cap: u128,
) -> Result<DagRanking> {
    let splits = enumerate_splits(graph, cap)?;
    let best = match algo {
        RankAlgo::Fast => best_split_memoized(graph, sample_count, lpr, &splits)?,
        _ => best_split_direct(graph, sample_count, lpr, algo, &splits)?,
    };
    let (_, assignment) = best;

    let split_graph = apply_split(graph, &assignment)?;
    let forest = InstanceForest::new(split_graph, sample_count, lpr.to_vec(), None)?;
    let ranking = algo.rank(&forest);
    let eauc_value = eauc(&ranking.lpr_in_order);
    let and_violations = and_semantics_report(graph, sample_count, &ranking);
    Ok(DagRanking {
        ranking,
        eauc: eauc_value,
        assignment,
        multi_parent_labels: splits.multi_parent_labels,
        and_violations,
    })
}

fn best_split_direct(
    graph: &LabelGraph,
    sample_count: usize,
    lpr: &[f64],
    algo: RankAlgo,
    splits: &SplitEnumeration,
) -> Result<(f64, ParentAssignment)> {
    let mut best: Option<(f64, ParentAssignment)> = None;
    for assignment in splits.assignments() {
        let split_graph = apply_split(graph, &assignment)?;
        let forest = InstanceForest::new(split_graph, sample_count, lpr.to_vec(), None)?;
        let value = eauc(&algo.rank(&forest).lpr_in_order);
        if best.as_ref().map_or(true, |(b, _)| value > *b) {
            best = Some((value, assignment));
        }
    }
    Ok(best.expect("at least one split"))
}

/// Score every split by k-way merging memoized per-component block lists.
/// A block starting at output position `p` (0-based) contributes
/// `(n - p) * sum - inner` to the eAUC, so no member walk is needed.
fn best_split_memoized(
    graph: &LabelGraph,
    sample_count: usize,
    lpr: &[f64],
    splits: &SplitEnumeration,
) -> Result<(f64, ParentAssignment)> {
    let k = graph.label_count();
    let n = k * sample_count;
    let components = graph.connected_components();
    let comp_of: Vec<usize> = {
        let mut map = vec![0usize; k];
        for (ci, members) in components.iter().enumerate() {
            for &v in members {
                map[v] = ci;
            }
        }
        map
    };
    // Assignment slots touching each component.
    let comp_slots: Vec<Vec<usize>> = {
        let mut slots = vec![Vec::new(); components.len()];
        for (slot, &label) in splits.multi_parent_labels.iter().enumerate() {
            slots[comp_of[label]].push(slot);
        }
        slots
    };

    let mut cache: HashMap<(usize, Vec<usize>), Vec<Vec<Seg>>> = HashMap::new();
    let mut best: Option<(f64, ParentAssignment)> = None;
    for assignment in splits.assignments() {
        let mut lists: Vec<Vec<Seg>> = Vec::new();
        for (ci, members) in components.iter().enumerate() {
            let restricted: Vec<usize> = comp_slots[ci].iter().map(|&s| assignment[s]).collect();
            let entry = match cache.entry((ci, restricted)) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(e) => {
                    let data = component_blocks(
                        graph,
                        sample_count,
                        lpr,
                        members,
                        &splits.multi_parent_labels,
                        &assignment,
                    )?;
                    e.insert(data)
                }
            };
            lists.extend(entry.iter().cloned());
        }
        let merged = kway_merge_keyed(lists, TieBreak::HeadAsc);
        let mut value = 0.0f64;
        let mut position = 0usize;
        for seg in &merged {
            value += (n - position) as f64 * seg.sum - seg.inner;
            position += seg.size;
        }
        if best.as_ref().map_or(true, |(b, _)| value > *b) {
            best = Some((value, assignment));
        }
    }
    Ok(best.expect("at least one split"))
}

/// Block lists of one component under the given assignment, with heads and
/// tails remapped into the full graph's instance-id space.
fn component_blocks(
    graph: &LabelGraph,
    sample_count: usize,
    lpr: &[f64],
    members: &[LabelId],
    multi_parent_labels: &[LabelId],
    assignment: &ParentAssignment,
) -> Result<Vec<Vec<Seg>>> {
    let k = graph.label_count();
    let local_of: HashMap<LabelId, usize> =
        members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let chosen: HashMap<LabelId, LabelId> = multi_parent_labels
        .iter()
        .zip(assignment)
        .map(|(&v, &pick)| (v, graph.parents(v)[pick]))
        .collect();
    let local_labels = members
        .iter()
        .enumerate()
        .map(|(i, &v)| crate::hierarchy::LabelRecord {
            id: i,
            name: graph.labels()[v].name.clone(),
        })
        .collect();
    let local_edges: Vec<(usize, usize)> = graph
        .edges()
        .iter()
        .filter(|&&(child, parent)| {
            local_of.contains_key(&child)
                && local_of.contains_key(&parent)
                && match chosen.get(&child) {
                    Some(&keep) => parent == keep,
                    None => true,
                }
        })
        .map(|&(child, parent)| (local_of[&child], local_of[&parent]))
        .collect();
    let local_graph = LabelGraph::new(local_labels, local_edges)?;
    let kc = members.len();
    let mut local_lpr = Vec::with_capacity(kc * sample_count);
    for m in 0..sample_count {
        for &v in members {
            local_lpr.push(lpr[m * k + v]);
        }
    }
    let forest = InstanceForest::new(local_graph, sample_count, local_lpr, None)?;
    let data = block_data(&forest, TieBreak::HeadAsc);
    let remap = |local_id: usize| {
        let sample = local_id / kc;
        let label = members[local_id % kc];
        sample * k + label
    };
    Ok(data
        .lists
        .into_iter()
        .map(|list| {
            list.into_iter()
                .map(|seg| Seg {
                    head: remap(seg.head),
                    tail: remap(seg.tail),
                    size: seg.size,
                    sum: seg.sum,
                    inner: seg.inner,
                })
                .collect()
        })
        .collect())
}

/// Instances appearing before one of their original parents (diagnostic).
fn and_semantics_report(
    graph: &LabelGraph,
    sample_count: usize,
    ranking: &Ranking,
) -> Vec<(usize, usize)> {
    let k = graph.label_count();
    let mut seen = vec![false; k * sample_count];
    let mut out = Vec::new();
    for &id in &ranking.order {
        let label = id % k;
        let base = id - label;
        for &p in graph.parents(label) {
            if !seen[base + p] {
                out.push((id, base + p));
            }
        }
        seen[id] = true;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{GraphKind, LabelRecord};

    fn labels(k: usize) -> Vec<LabelRecord> {
        (0..k)
            .map(|id| LabelRecord {
                id,
                name: format!("L{id}"),
            })
            .collect()
    }

    #[test]
    fn forest_input_has_identity_split() {
        let g = LabelGraph::new(labels(3), vec![(1, 0), (2, 1)]).unwrap();
        let splits = enumerate_splits(&g, DEFAULT_SPLIT_CAP).unwrap();
        assert_eq!(splits.count, 1);
        assert_eq!(splits.assignments().count(), 1);
        assert!(splits.multi_parent_labels.is_empty());
    }

    #[test]
    fn three_parent_label_gives_three_splits() {
        let g = LabelGraph::new(labels(4), vec![(3, 0), (3, 1), (3, 2)]).unwrap();
        assert_eq!(g.kind(), GraphKind::TreeLikeDag);
        let splits = enumerate_splits(&g, DEFAULT_SPLIT_CAP).unwrap();
        assert_eq!(splits.count, 3);
        let all: Vec<_> = splits.assignments().collect();
        assert_eq!(all, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn seven_double_parent_labels_give_128_splits() {
        // A diamond ladder: c_i has parents a_i and b_i.
        let mut edges = Vec::new();
        let mut next = 1usize;
        let mut prev = 0usize;
        for _ in 0..7 {
            let (a, b, c) = (next, next + 1, next + 2);
            edges.push((a, prev));
            edges.push((b, prev));
            edges.push((c, a));
            edges.push((c, b));
            prev = c;
            next += 3;
        }
        let g = LabelGraph::new(labels(next), edges).unwrap();
        let splits = enumerate_splits(&g, DEFAULT_SPLIT_CAP).unwrap();
        assert_eq!(splits.count, 128);
        assert_eq!(splits.assignments().count(), 128);
    }

    #[test]
    fn split_cap_enforced() {
        let mut edges = Vec::new();
        for i in 0..13 {
            let child = 2 + i;
            edges.push((child, 0));
            edges.push((child, 1));
        }
        let g = LabelGraph::new(labels(15), edges).unwrap();
        assert!(matches!(
            enumerate_splits(&g, 4096).unwrap_err(),
            Error::SplitCapExceeded { count: 8192, .. }
        ));
    }

    #[test]
    fn forest_input_ranks_identically_to_direct_ranking() {
        let g = LabelGraph::new(labels(4), vec![(1, 0), (2, 0)]).unwrap();
        let lpr = vec![0.2, 0.9, 0.7, 0.65];
        let direct = hier_lpr_fast(&InstanceForest::new(g.clone(), 1, lpr.clone(), None).unwrap());
        let dag = rank_dag(&g, 1, &lpr, RankAlgo::Fast, DEFAULT_SPLIT_CAP).unwrap();
        assert_eq!(dag.ranking.order, direct.order);
        assert!(dag.assignment.is_empty());
        assert!(dag.and_violations.is_empty());
    }

    #[test]
    fn diamond_picks_the_better_parent() {
        // root 0 -> {1, 2}, 3 has parents 1 and 2. A high LPR on 3 and on 1
        // makes attaching 3 under 1 strictly better.
        let g = LabelGraph::new(labels(4), vec![(1, 0), (2, 0), (3, 1), (3, 2)]).unwrap();
        let lpr = vec![0.5, 0.9, 0.1, 0.95];
        let dag = rank_dag(&g, 1, &lpr, RankAlgo::Fast, DEFAULT_SPLIT_CAP).unwrap();
        assert_eq!(dag.multi_parent_labels, vec![3]);
        // Parent list of 3 is [1, 2]; choice 0 keeps edge (3, 1).
        assert_eq!(dag.assignment, vec![0]);

        // Oracle: evaluate both splits directly.
        let mut values = Vec::new();
        for pick in 0..2 {
            let forest = InstanceForest::new(
                apply_split(&g, &vec![pick]).unwrap(),
                1,
                lpr.clone(),
                None,
            )
            .unwrap();
            values.push(eauc(&hier_lpr_fast(&forest).lpr_in_order));
        }
        assert!(values[0] > values[1]);
        assert!((dag.eauc - values[0]).abs() < 1e-12);
    }

    #[test]
    fn selected_eauc_is_max_over_all_splits() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(107);
        // Two diamonds plus a standalone chain, random LPRs, M = 2.
        let edges = vec![
            (1, 0),
            (2, 0),
            (3, 1),
            (3, 2), // diamond 1
            (5, 4),
            (6, 4),
            (7, 5),
            (7, 6), // diamond 2
            (9, 8), // chain
        ];
        let g = LabelGraph::new(labels(10), edges).unwrap();
        for _ in 0..10 {
            let lpr: Vec<f64> = (0..20).map(|_| rng.gen()).collect();
            let dag = rank_dag(&g, 2, &lpr, RankAlgo::Fast, DEFAULT_SPLIT_CAP).unwrap();
            let splits = enumerate_splits(&g, DEFAULT_SPLIT_CAP).unwrap();
            let mut best = f64::NEG_INFINITY;
            for assignment in splits.assignments() {
                let forest = InstanceForest::new(
                    apply_split(&g, &assignment).unwrap(),
                    2,
                    lpr.clone(),
                    None,
                )
                .unwrap();
                best = best.max(eauc(&hier_lpr_fast(&forest).lpr_in_order));
            }
            assert!((dag.eauc - best).abs() < 1e-12);
        }
    }

    #[test]
    fn candidate_rankings_respect_their_split() {
        use crate::hierarchy::validate_ordering;
        let g = LabelGraph::new(labels(4), vec![(1, 0), (2, 0), (3, 1), (3, 2)]).unwrap();
        let lpr = vec![0.5, 0.9, 0.1, 0.95];
        let dag = rank_dag(&g, 1, &lpr, RankAlgo::Fast, DEFAULT_SPLIT_CAP).unwrap();
        let split = apply_split(&g, &dag.assignment).unwrap();
        let forest = InstanceForest::new(split, 1, lpr, None).unwrap();
        assert!(validate_ordering(&forest, &dag.ranking.order)
            .unwrap()
            .is_consistent());
        // The non-chosen parent edge (3, 2) may be violated; it must then
        // show up in the diagnostic.
        let violated = dag
            .and_violations
            .iter()
            .any(|&(desc, parent)| desc == 3 && parent == 2);
        let pos3 = dag.ranking.positions[3];
        let pos2 = dag.ranking.positions[2];
        assert_eq!(violated, pos3 < pos2);
    }
}

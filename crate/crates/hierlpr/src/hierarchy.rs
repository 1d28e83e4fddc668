//! Label hierarchies and per-sample instance forests.
//!
//! A [`LabelGraph`] describes the hierarchy over the `K` candidate labels,
//! either a forest or a tree-like DAG (labels with more than one parent).
//! An [`InstanceForest`] replicates a forest-shaped graph once per sample,
//! giving `n = K * M` instances, each carrying an LPR value and optionally
//! a ground-truth bit.
//!
//! Instance ids are `sample_index * K + label_id`. This canonical id doubles
//! as the total order used for deterministic tie-breaking by every ranker.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Dense label identifier in `[0, K)`.
pub type LabelId = usize;
/// Canonical instance identifier: `sample * K + label`.
pub type InstanceId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRecord {
    pub id: LabelId,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Forest,
    TreeLikeDag,
}

/// The shared label hierarchy over `K` labels.
#[derive(Debug, Clone)]
pub struct LabelGraph {
    labels: Vec<LabelRecord>,
    edges: Vec<(LabelId, LabelId)>,
    parents: Vec<Vec<LabelId>>,
    children: Vec<Vec<LabelId>>,
    kind: GraphKind,
}

impl LabelGraph {
    /// Build and validate a hierarchy from label records and
    /// `(child, parent)` edges. Duplicate edges collapse to one.
    pub fn new(labels: Vec<LabelRecord>, edges: Vec<(LabelId, LabelId)>) -> Result<Self> {
        let k = labels.len();
        let mut seen = vec![false; k];
        for rec in &labels {
            if rec.id >= k || seen[rec.id] {
                return Err(Error::BadLabelIds {
                    expected: k,
                    detail: format!("label id {} duplicated or out of range", rec.id),
                });
            }
            seen[rec.id] = true;
        }
        let mut labels = labels;
        labels.sort_by_key(|r| r.id);

        let mut edges = edges;
        edges.sort_unstable();
        edges.dedup();

        let mut parents = vec![Vec::new(); k];
        let mut children = vec![Vec::new(); k];
        for &(child, parent) in &edges {
            if child >= k || parent >= k {
                return Err(Error::BadLabelIds {
                    expected: k,
                    detail: format!("edge ({child}, {parent}) references unknown label"),
                });
            }
            if child == parent {
                return Err(Error::Cycle(child));
            }
            parents[child].push(parent);
            children[parent].push(child);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }

        // Kahn's algorithm over parent -> child edges.
        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut queue: Vec<LabelId> = (0..k).filter(|&v| indegree[v] == 0).collect();
        let mut visited = 0;
        while let Some(v) = queue.pop() {
            visited += 1;
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push(c);
                }
            }
        }
        if visited != k {
            let culprit = (0..k).find(|&v| indegree[v] > 0).unwrap_or(0);
            return Err(Error::Cycle(culprit));
        }

        let kind = if parents.iter().all(|p| p.len() <= 1) {
            GraphKind::Forest
        } else {
            GraphKind::TreeLikeDag
        };
        Ok(Self {
            labels,
            edges,
            parents,
            children,
            kind,
        })
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn labels(&self) -> &[LabelRecord] {
        &self.labels
    }

    pub fn edges(&self) -> &[(LabelId, LabelId)] {
        &self.edges
    }

    pub fn parents(&self, label: LabelId) -> &[LabelId] {
        &self.parents[label]
    }

    /// Children sorted by label id.
    pub fn children(&self, label: LabelId) -> &[LabelId] {
        &self.children[label]
    }

    pub fn roots(&self) -> impl Iterator<Item = LabelId> + '_ {
        (0..self.label_count()).filter(|&v| self.parents[v].is_empty())
    }

    /// Labels with more than one parent (drives the split-enumeration bound).
    pub fn multi_parent_labels(&self) -> Vec<LabelId> {
        (0..self.label_count())
            .filter(|&v| self.parents[v].len() > 1)
            .collect()
    }

    /// Unique parent of a label, or an error when the graph is not a forest.
    pub fn parent_of(&self, label: LabelId) -> Result<Option<LabelId>> {
        match self.parents[label].as_slice() {
            [] => Ok(None),
            [p] => Ok(Some(*p)),
            many => Err(Error::NotAForest {
                label,
                parents: many.len(),
            }),
        }
    }

    /// Connected components under undirected reachability, each sorted,
    /// listed in order of their smallest label.
    pub fn connected_components(&self) -> Vec<Vec<LabelId>> {
        let k = self.label_count();
        let mut component = vec![usize::MAX; k];
        let mut out = Vec::new();
        for start in 0..k {
            if component[start] != usize::MAX {
                continue;
            }
            let idx = out.len();
            let mut stack = vec![start];
            let mut members = Vec::new();
            component[start] = idx;
            while let Some(v) = stack.pop() {
                members.push(v);
                for &w in self.parents[v].iter().chain(self.children[v].iter()) {
                    if component[w] == usize::MAX {
                        component[w] = idx;
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

/// The `n = K * M` forest of (sample, label) instances.
///
/// Requires a forest-shaped graph; tree-like DAGs must be split first (see
/// the `dag` module). Immutable after construction.
#[derive(Debug, Clone)]
pub struct InstanceForest {
    graph: LabelGraph,
    parent_label: Vec<Option<LabelId>>,
    sample_count: usize,
    lpr: Vec<f64>,
    truth: Option<Vec<bool>>,
}

impl InstanceForest {
    /// Build an instance forest from a dense LPR table laid out as
    /// `lpr[sample * K + label]`, with optional truth bits in the same
    /// layout. Validates score range, table completeness, and hierarchy
    /// consistency of the truth.
    pub fn new(
        graph: LabelGraph,
        sample_count: usize,
        lpr: Vec<f64>,
        truth: Option<Vec<bool>>,
    ) -> Result<Self> {
        if let Some(bad) = graph
            .multi_parent_labels()
            .first()
            .copied()
        {
            return Err(Error::NotAForest {
                label: bad,
                parents: graph.parents(bad).len(),
            });
        }
        let k = graph.label_count();
        let n = k * sample_count;
        if lpr.len() != n {
            return Err(Error::MissingScore {
                sample: lpr.len() / k.max(1),
                label: lpr.len() % k.max(1),
            });
        }
        for (i, &v) in lpr.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::BadScore {
                    sample: i / k,
                    label: i % k,
                    value: v,
                });
            }
        }
        let parent_label: Vec<Option<LabelId>> = (0..k)
            .map(|v| graph.parent_of(v).expect("forest checked above"))
            .collect();
        if let Some(bits) = &truth {
            if bits.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: bits.len(),
                });
            }
            for m in 0..sample_count {
                for child in 0..k {
                    if let Some(parent) = parent_label[child] {
                        if bits[m * k + child] && !bits[m * k + parent] {
                            return Err(Error::TruthInconsistency {
                                sample: m,
                                child,
                                parent,
                            });
                        }
                    }
                }
            }
        }
        Ok(Self {
            graph,
            parent_label,
            sample_count,
            lpr,
            truth,
        })
    }

    pub fn graph(&self) -> &LabelGraph {
        &self.graph
    }

    pub fn label_count(&self) -> usize {
        self.graph.label_count()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// Total instance count `n = K * M`.
    pub fn len(&self) -> usize {
        self.lpr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lpr.is_empty()
    }

    pub fn instance_id(&self, sample: usize, label: LabelId) -> InstanceId {
        sample * self.label_count() + label
    }

    pub fn sample_of(&self, id: InstanceId) -> usize {
        id / self.label_count()
    }

    pub fn label_of(&self, id: InstanceId) -> LabelId {
        id % self.label_count()
    }

    pub fn lpr(&self, id: InstanceId) -> f64 {
        self.lpr[id]
    }

    pub fn lprs(&self) -> &[f64] {
        &self.lpr
    }

    pub fn truth(&self) -> Option<&[bool]> {
        self.truth.as_deref()
    }

    pub fn truth_bit(&self, id: InstanceId) -> Option<bool> {
        self.truth.as_ref().map(|t| t[id])
    }

    /// Parent instance within the same sample, if any.
    pub fn parent_instance(&self, id: InstanceId) -> Option<InstanceId> {
        let k = self.label_count();
        self.parent_label[id % k].map(|p| (id / k) * k + p)
    }

    /// Children instances within the same sample, ascending by id.
    pub fn child_instances(&self, id: InstanceId) -> Vec<InstanceId> {
        let k = self.label_count();
        let base = (id / k) * k;
        self.graph
            .children(id % k)
            .iter()
            .map(|&c| base + c)
            .collect()
    }

    /// Root instances across all samples, ascending by id.
    pub fn root_instances(&self) -> Vec<InstanceId> {
        let k = self.label_count();
        let roots: Vec<LabelId> = self.graph.roots().collect();
        let mut out = Vec::with_capacity(roots.len() * self.sample_count);
        for m in 0..self.sample_count {
            for &r in &roots {
                out.push(m * k + r);
            }
        }
        out
    }

    /// View of the pure chain descending from `root`; errors when some node
    /// on the path has more than one child.
    pub fn chain_view(&self, root: InstanceId) -> Result<ChainView> {
        let mut nodes = vec![root];
        let mut cur = root;
        loop {
            let children = self.child_instances(cur);
            match children.as_slice() {
                [] => break,
                [only] => {
                    nodes.push(*only);
                    cur = *only;
                }
                many => {
                    return Err(Error::NotAForest {
                        label: self.label_of(cur),
                        parents: many.len(),
                    })
                }
            }
        }
        let lprs: Vec<f64> = nodes.iter().map(|&id| self.lpr[id]).collect();
        Ok(ChainView::new(nodes, lprs))
    }
}

/// A pure descent path with cumulative LPR sums, so the average of the first
/// `i` nodes is `prefix_sum(i) / i`.
#[derive(Debug, Clone)]
pub struct ChainView {
    nodes: Vec<InstanceId>,
    lprs: Vec<f64>,
    prefix_sums: Vec<f64>,
}

impl ChainView {
    pub fn new(nodes: Vec<InstanceId>, lprs: Vec<f64>) -> Self {
        assert_eq!(nodes.len(), lprs.len());
        let mut prefix_sums = Vec::with_capacity(lprs.len() + 1);
        prefix_sums.push(0.0);
        let mut acc = 0.0;
        for &v in &lprs {
            acc += v;
            prefix_sums.push(acc);
        }
        Self {
            nodes,
            lprs,
            prefix_sums,
        }
    }

    pub fn root(&self) -> InstanceId {
        self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[InstanceId] {
        &self.nodes
    }

    pub fn lprs(&self) -> &[f64] {
        &self.lprs
    }

    /// Cumulative sum of the first `i` LPRs, `prefix_sum(0) == 0`.
    pub fn prefix_sum(&self, i: usize) -> f64 {
        self.prefix_sums[i]
    }

    /// Sum of LPRs over positions `[start, end)`.
    pub fn range_sum(&self, start: usize, end: usize) -> f64 {
        self.prefix_sums[end] - self.prefix_sums[start]
    }
}

/// The set of nodes with multiple children whose children all head pure
/// chains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JunctionSet {
    pub members: BTreeSet<InstanceId>,
}

/// Compute the junction set of the forest: nodes with multiple child nodes,
/// all of whose children have at most one descendant in each generation.
pub fn compute_junction_set(forest: &InstanceForest) -> JunctionSet {
    let graph = forest.graph();
    let k = graph.label_count();
    // is_chain[v]: the subtree rooted at v is a pure descent path.
    let mut is_chain = vec![false; k];
    let mut order: Vec<LabelId> = (0..k).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(depth_of(graph, v)));
    for v in order {
        is_chain[v] = match graph.children(v) {
            [] => true,
            [c] => is_chain[*c],
            _ => false,
        };
    }
    let junction_labels: Vec<LabelId> = (0..k)
        .filter(|&v| {
            let ch = graph.children(v);
            ch.len() >= 2 && ch.iter().all(|&c| is_chain[c])
        })
        .collect();
    let mut members = BTreeSet::new();
    for m in 0..forest.sample_count() {
        for &v in &junction_labels {
            members.insert(m * k + v);
        }
    }
    JunctionSet { members }
}

fn depth_of(graph: &LabelGraph, mut v: LabelId) -> usize {
    let mut d = 0;
    while let Ok(Some(p)) = graph.parent_of(v) {
        v = p;
        d += 1;
    }
    d
}

/// Outcome of [`validate_ordering`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingCheck {
    Consistent,
    /// First inversion found: `ancestor` appears after `descendant`.
    Violation {
        ancestor: InstanceId,
        descendant: InstanceId,
    },
}

impl OrderingCheck {
    pub fn is_consistent(&self) -> bool {
        matches!(self, OrderingCheck::Consistent)
    }
}

/// Check that `order` is a hierarchy-consistent permutation of all instance
/// ids: every ancestor precedes each of its descendants.
pub fn validate_ordering(forest: &InstanceForest, order: &[InstanceId]) -> Result<OrderingCheck> {
    let n = forest.len();
    if order.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: order.len(),
        });
    }
    let mut emitted = vec![false; n];
    for &id in order {
        if id >= n || emitted[id] {
            return Err(Error::NotAPermutation(id));
        }
        if let Some(parent) = forest.parent_instance(id) {
            if !emitted[parent] {
                return Ok(OrderingCheck::Violation {
                    ancestor: parent,
                    descendant: id,
                });
            }
        }
        emitted[id] = true;
    }
    Ok(OrderingCheck::Consistent)
}

/// Enumerate every hierarchy-consistent permutation of the forest, each
/// exactly once, in lexicographic instance-id order. Errors once more than
/// `cap` orderings have been produced.
pub fn enumerate_topological_orderings(
    forest: &InstanceForest,
    cap: u64,
) -> Result<Vec<Vec<InstanceId>>> {
    let n = forest.len();
    let mut pending_parents: Vec<u8> = (0..n)
        .map(|id| u8::from(forest.parent_instance(id).is_some()))
        .collect();
    let mut available: BTreeSet<InstanceId> = (0..n)
        .filter(|&id| pending_parents[id] == 0)
        .collect();
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(n);
    enumerate_rec(
        forest,
        &mut available,
        &mut pending_parents,
        &mut prefix,
        cap,
        &mut out,
    )?;
    Ok(out)
}

fn enumerate_rec(
    forest: &InstanceForest,
    available: &mut BTreeSet<InstanceId>,
    pending_parents: &mut [u8],
    prefix: &mut Vec<InstanceId>,
    cap: u64,
    out: &mut Vec<Vec<InstanceId>>,
) -> Result<()> {
    if prefix.len() == forest.len() {
        if out.len() as u64 >= cap {
            return Err(Error::CapExceeded {
                count: out.len() as u64 + 1,
            });
        }
        out.push(prefix.clone());
        return Ok(());
    }
    let candidates: Vec<InstanceId> = available.iter().copied().collect();
    for id in candidates {
        available.remove(&id);
        prefix.push(id);
        let children = forest.child_instances(id);
        for &c in &children {
            pending_parents[c] -= 1;
            if pending_parents[c] == 0 {
                available.insert(c);
            }
        }
        enumerate_rec(forest, available, pending_parents, prefix, cap, out)?;
        for &c in &children {
            if pending_parents[c] == 0 {
                available.remove(&c);
            }
            pending_parents[c] += 1;
        }
        prefix.pop();
        available.insert(id);
    }
    Ok(())
}

/// A hierarchy-consistent permutation of the instances together with
/// per-position LPRs and block provenance.
#[derive(Debug, Clone)]
pub struct Ranking {
    /// Instance ids in call order.
    pub order: Vec<InstanceId>,
    /// Inverse permutation: `positions[id]` is the 0-based call position.
    pub positions: Vec<usize>,
    /// LPR of each instance in call order.
    pub lpr_in_order: Vec<f64>,
    /// Contiguous block spans of the output, in emission order.
    pub blocks: Vec<RankedBlock>,
    /// Which algorithm produced the ranking.
    pub algorithm: &'static str,
    /// Descriptor of the deterministic tie rule used.
    pub tie_policy: &'static str,
}

/// One emitted block: a contiguous span of the output with its exact
/// `(sum, size)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedBlock {
    pub start: usize,
    pub len: usize,
    pub sum_lpr: f64,
}

impl RankedBlock {
    pub fn mean_lpr(&self) -> f64 {
        self.sum_lpr / self.len as f64
    }
}

impl Ranking {
    pub fn new(
        forest: &InstanceForest,
        order: Vec<InstanceId>,
        blocks: Vec<RankedBlock>,
        algorithm: &'static str,
        tie_policy: &'static str,
    ) -> Self {
        let lpr_in_order = order.iter().map(|&id| forest.lpr(id)).collect();
        Self::from_parts(order, lpr_in_order, blocks, algorithm, tie_policy)
    }

    /// Assemble a ranking over an arbitrary node subset (`positions` of
    /// absent ids are `usize::MAX`).
    pub fn from_parts(
        order: Vec<InstanceId>,
        lpr_in_order: Vec<f64>,
        blocks: Vec<RankedBlock>,
        algorithm: &'static str,
        tie_policy: &'static str,
    ) -> Self {
        let max_id = order.iter().copied().max().map_or(0, |m| m + 1);
        let mut positions = vec![usize::MAX; max_id];
        for (pos, &id) in order.iter().enumerate() {
            positions[id] = pos;
        }
        Self {
            order,
            positions,
            lpr_in_order,
            blocks,
            algorithm,
            tie_policy,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Index of the block containing the 0-based output position.
    pub fn block_of(&self, position: usize) -> usize {
        match self
            .blocks
            .binary_search_by(|b| b.start.cmp(&position))
        {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    /// The monotone calling score per position: each instance carries its
    /// block's mean LPR. Nonincreasing along the ranking, so thresholding
    /// it always cuts a prefix.
    pub fn block_mean_in_order(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for block in &self.blocks {
            let mean = block.mean_lpr();
            out.extend(std::iter::repeat(mean).take(block.len));
        }
        out
    }

    /// Truth bits in call order, when the forest carries truth.
    pub fn truth_in_order(&self, forest: &InstanceForest) -> Option<Vec<bool>> {
        forest
            .truth()
            .map(|t| self.order.iter().map(|&id| t[id]).collect())
    }
}

//! Exhaustive eAUC maximization over all hierarchy-consistent orderings.
//!
//! Dynamic programming over emitted-node subsets: a state is the set of
//! already-called instances (always ancestor-closed), and the value is the
//! best achievable remaining eAUC. This visits every linear extension
//! implicitly, so it is exact, while staying feasible for the n <= 12
//! forests the oracle is meant for. Hard-capped at 20 nodes.

use crate::error::{Error, Result};
use crate::hierarchy::{InstanceForest, Ranking};
use crate::ranker::blocks::{block_boundaries, TieBreak};
use crate::hierarchy::RankedBlock;

/// Largest forest the subset DP will take on.
pub const BRUTE_FORCE_MAX_NODES: usize = 20;

/// Optimal ordering and its eAUC.
#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub ranking: Ranking,
    pub eauc: f64,
}

/// Maximize eAUC over every topological ordering of the forest. Ties between
/// equally optimal next picks go to the smaller instance id.
pub fn brute_force_optimal(forest: &InstanceForest) -> Result<BruteForceResult> {
    let n = forest.len();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(Error::CapExceeded { count: n as u64 });
    }
    if n == 0 {
        return Ok(BruteForceResult {
            ranking: Ranking::from_parts(
                Vec::new(),
                Vec::new(),
                Vec::new(),
                "brute-force",
                TieBreak::HeadAsc.descriptor(),
            ),
            eauc: 0.0,
        });
    }

    let parents: Vec<Option<usize>> = (0..n).map(|id| forest.parent_instance(id)).collect();
    let lpr = forest.lprs();
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };

    // value[mask]: best remaining eAUC once `mask` has been emitted.
    let mut value = vec![f64::NEG_INFINITY; (full as usize) + 1];
    value[full as usize] = 0.0;
    for mask in (0..full).rev() {
        let emitted = mask.count_ones() as usize;
        let weight = (n - emitted) as f64;
        let mut best = f64::NEG_INFINITY;
        for v in 0..n {
            if mask & (1 << v) != 0 {
                continue;
            }
            if let Some(p) = parents[v] {
                if mask & (1 << p) == 0 {
                    continue;
                }
            }
            let candidate = weight * lpr[v] + value[(mask | (1 << v)) as usize];
            if candidate > best {
                best = candidate;
            }
        }
        value[mask as usize] = best;
    }

    // Recover the ordering: smallest id among the argmax picks.
    let mut order = Vec::with_capacity(n);
    let mut mask = 0u32;
    while order.len() < n {
        let emitted = mask.count_ones() as usize;
        let weight = (n - emitted) as f64;
        let mut chosen = None;
        for v in 0..n {
            if mask & (1 << v) != 0 {
                continue;
            }
            if let Some(p) = parents[v] {
                if mask & (1 << p) == 0 {
                    continue;
                }
            }
            let candidate = weight * lpr[v] + value[(mask | (1 << v)) as usize];
            if candidate == value[mask as usize] {
                chosen = Some(v);
                break;
            }
        }
        let v = chosen.expect("an available node attains the DP value");
        order.push(v);
        mask |= 1 << v;
    }

    let lprs_in_order: Vec<f64> = order.iter().map(|&id| lpr[id]).collect();
    let mut blocks = Vec::new();
    let mut start = 0;
    for end in block_boundaries(&lprs_in_order) {
        blocks.push(RankedBlock {
            start,
            len: end - start,
            sum_lpr: lprs_in_order[start..end].iter().sum(),
        });
        start = end;
    }
    let eauc = value[0];
    Ok(BruteForceResult {
        ranking: Ranking::from_parts(
            order,
            lprs_in_order,
            blocks,
            "brute-force",
            TieBreak::HeadAsc.descriptor(),
        ),
        eauc,
    })
}

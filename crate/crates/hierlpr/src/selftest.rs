//! Embedded verification suite: the worked micro-examples plus the
//! oracle-equivalence properties on seeded random forests, packaged so end
//! users (and the CLI) can re-run them on any build.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hierarchy::{validate_ordering, InstanceForest, LabelGraph, LabelRecord};
use crate::metrics::{eauc, eauc_exact};
use crate::ranker::{
    brute_force_optimal, cssa_rank_with_tie, hier_lpr_fast_with_tie, hier_lpr_naive_with_tie,
    TieBreak,
};

#[derive(Debug, Clone)]
pub struct SelfTestConfig {
    /// Random forests per property.
    pub trials: usize,
    pub seed: u64,
    /// Maximum nodes per random forest (brute force stays exact).
    pub max_nodes: usize,
    /// Diagnostic fault injection: run the condensation ranker with the
    /// reversed tie rule. The sequence property must then fail while the
    /// eAUC properties keep passing.
    pub corrupt_tie_rule: bool,
}

impl Default for SelfTestConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: 0,
            max_nodes: 10,
            corrupt_tie_rule: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelfTestEntry {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SelfTestReport {
    pub entries: Vec<SelfTestEntry>,
}

impl SelfTestReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

fn label_records(k: usize) -> Vec<LabelRecord> {
    (0..k)
        .map(|id| LabelRecord {
            id,
            name: format!("L{id}"),
        })
        .collect()
}

/// Random forest with `1..=max_nodes` nodes and the given LPR source.
pub fn random_forest(
    rng: &mut ChaCha8Rng,
    max_nodes: usize,
    mut lpr_source: impl FnMut(&mut ChaCha8Rng) -> f64,
) -> InstanceForest {
    let k = rng.gen_range(1..=max_nodes);
    let mut edges = Vec::new();
    for child in 1..k {
        if rng.gen_bool(0.7) {
            edges.push((child, rng.gen_range(0..child)));
        }
    }
    let graph = LabelGraph::new(label_records(k), edges).expect("generated forests are valid");
    let lprs: Vec<f64> = (0..k).map(|_| lpr_source(rng)).collect();
    InstanceForest::new(graph, 1, lprs, None).expect("generated LPRs are valid")
}

/// Run the suite and report one entry per property.
pub fn run(config: &SelfTestConfig) -> SelfTestReport {
    let cssa_tie = if config.corrupt_tie_rule {
        TieBreak::HeadDesc
    } else {
        TieBreak::HeadAsc
    };
    let canonical = TieBreak::HeadAsc;
    let mut entries = Vec::new();

    // Worked micro-example: root 0.2 over 0.9 / 0.7, standalone 0.65.
    {
        let graph = LabelGraph::new(label_records(4), vec![(1, 0), (2, 0)]).unwrap();
        let forest = InstanceForest::new(graph, 1, vec![0.2, 0.9, 0.7, 0.65], None).unwrap();
        let expected = vec![3usize, 0, 1, 2];
        let naive = hier_lpr_naive_with_tie(&forest, canonical);
        let fast = hier_lpr_fast_with_tie(&forest, canonical);
        let cssa = cssa_rank_with_tie(&forest, cssa_tie);
        let brute = brute_force_optimal(&forest).unwrap();
        let value_ok = (eauc(&naive.lpr_in_order) - 5.7).abs() < 1e-12
            && (brute.eauc - 5.7).abs() < 1e-12;
        let order_ok = naive.order == expected
            && fast.order == expected
            && cssa.order == expected
            && brute.ranking.order == expected;
        entries.push(SelfTestEntry {
            name: "worked-micro-example",
            passed: value_ok && order_ok,
            detail: format!(
                "expected order {:?} with eAUC 5.7; naive {:?}",
                expected, naive.order
            ),
        });
    }

    // Theorem 1: the merge ranking attains the brute-force optimum.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut failures = 0usize;
        let mut worst = 0.0f64;
        for _ in 0..config.trials {
            let forest = random_forest(&mut rng, config.max_nodes, |r| r.gen());
            let naive = hier_lpr_naive_with_tie(&forest, canonical);
            let brute = brute_force_optimal(&forest).unwrap();
            let gap = (eauc(&naive.lpr_in_order) - brute.eauc).abs();
            worst = worst.max(gap);
            if gap > 1e-9 {
                failures += 1;
            }
        }
        entries.push(SelfTestEntry {
            name: "optimality-vs-brute-force",
            passed: failures == 0,
            detail: format!(
                "{} trials, {} failures, worst |gap| {:.2e}",
                config.trials, failures, worst
            ),
        });
    }

    // Theorem 2: identical sequences on continuous draws (block-mean ties
    // have probability zero).
    {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
        let mut failures = 0usize;
        for _ in 0..config.trials {
            let forest = random_forest(&mut rng, config.max_nodes, |r| r.gen());
            let naive = hier_lpr_naive_with_tie(&forest, canonical);
            let fast = hier_lpr_fast_with_tie(&forest, canonical);
            let cssa = cssa_rank_with_tie(&forest, cssa_tie);
            if naive.order != fast.order || naive.order != cssa.order {
                failures += 1;
            }
        }
        entries.push(SelfTestEntry {
            name: "equivalence-sequences",
            passed: failures == 0,
            detail: format!("{} trials, {} sequence mismatches", config.trials, failures),
        });
    }

    // Tie rule: duplicated values in flat forests emit in a shared
    // deterministic order across all rankers.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
        let mut failures = 0usize;
        for _ in 0..config.trials {
            let k = rng.gen_range(2..=config.max_nodes);
            let graph = LabelGraph::new(label_records(k), Vec::new()).unwrap();
            let pool: Vec<f64> = vec![0.25, 0.5, 0.5, 0.75];
            let lprs: Vec<f64> = (0..k).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
            let forest = InstanceForest::new(graph, 1, lprs, None).unwrap();
            let naive = hier_lpr_naive_with_tie(&forest, canonical);
            let fast = hier_lpr_fast_with_tie(&forest, canonical);
            let cssa = cssa_rank_with_tie(&forest, cssa_tie);
            if naive.order != fast.order || naive.order != cssa.order {
                failures += 1;
            }
        }
        entries.push(SelfTestEntry {
            name: "equivalence-sequences-under-ties",
            passed: failures == 0,
            detail: format!("{} trials, {} sequence mismatches", config.trials, failures),
        });
    }

    // Tie invariance: exact rational eAUC equality under forced ties.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(3));
        let mut failures = 0usize;
        for _ in 0..config.trials {
            let forest = random_forest(&mut rng, config.max_nodes, |r| {
                f64::from(r.gen_range(0..=8u8)) / 8.0
            });
            let naive = hier_lpr_naive_with_tie(&forest, canonical);
            let fast = hier_lpr_fast_with_tie(&forest, canonical);
            let cssa = cssa_rank_with_tie(&forest, cssa_tie);
            let reference = eauc_exact(&naive.lpr_in_order);
            if reference != eauc_exact(&fast.lpr_in_order)
                || reference != eauc_exact(&cssa.lpr_in_order)
            {
                failures += 1;
            }
        }
        entries.push(SelfTestEntry {
            name: "equivalence-eauc-under-ties",
            passed: failures == 0,
            detail: format!("{} trials, {} eAUC mismatches", config.trials, failures),
        });
    }

    // Every ranker output is a hierarchy-consistent permutation.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(4));
        let mut failures = 0usize;
        for _ in 0..config.trials {
            let forest = random_forest(&mut rng, config.max_nodes, |r| r.gen());
            for order in [
                hier_lpr_naive_with_tie(&forest, canonical).order,
                hier_lpr_fast_with_tie(&forest, canonical).order,
                cssa_rank_with_tie(&forest, cssa_tie).order,
            ] {
                if !validate_ordering(&forest, &order)
                    .map(|c| c.is_consistent())
                    .unwrap_or(false)
                {
                    failures += 1;
                }
            }
        }
        entries.push(SelfTestEntry {
            name: "hierarchy-consistency",
            passed: failures == 0,
            detail: format!(
                "{} trials x 3 rankers, {} violations",
                config.trials, failures
            ),
        });
    }

    SelfTestReport { entries }
}

//! Synthetic experiment harness: the four three-node benchmark settings,
//! truth/score generation, cutoff selection on a held-out split, and
//! replication studies comparing the hierarchy-aware ranking against the
//! plain LPR sort.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta as BetaSampler, Distribution};

use crate::error::{Error, Result};
use crate::hierarchy::{InstanceForest, LabelGraph, LabelId, LabelRecord};
use crate::lpr::{LprEstimator, ScoreColumn};
use crate::metrics::{average_pr_curves, f_measure_at, pr_curve};
use crate::ranker::hier_lpr_fast;

/// Classifier quality of a node; drives the Beta score distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeQuality {
    High,
    Medium,
    Low,
}

impl NodeQuality {
    /// Beta shape `eta`: positives score Beta(6, eta), negatives Beta(eta, 6).
    fn eta(self) -> f64 {
        match self {
            NodeQuality::High => 2.0,
            NodeQuality::Medium => 4.0,
            NodeQuality::Low => 5.5,
        }
    }
}

/// One synthetic benchmark setting: a three-node topology with per-node
/// classifier qualities and dataset sizes.
#[derive(Debug, Clone)]
pub struct SimSetting {
    pub setting_id: u8,
    pub edges: Vec<(LabelId, LabelId)>,
    pub quality: Vec<NodeQuality>,
    pub train_size: usize,
    pub test_size: usize,
    pub min_positives: usize,
    pub seed: u64,
}

impl SimSetting {
    /// The four standard settings:
    /// 1. chain high -> medium -> low (strong classifiers on top);
    /// 2. chain high -> low -> medium (the weak node in the middle);
    /// 3. fork with a low-quality root over two high-quality children;
    /// 4. three standalone nodes (high, medium, low).
    pub fn standard(setting_id: u8, seed: u64) -> Result<Self> {
        let (edges, quality) = match setting_id {
            1 => (
                vec![(1, 0), (2, 1)],
                vec![NodeQuality::High, NodeQuality::Medium, NodeQuality::Low],
            ),
            2 => (
                vec![(1, 0), (2, 1)],
                vec![NodeQuality::High, NodeQuality::Low, NodeQuality::Medium],
            ),
            3 => (
                vec![(1, 0), (2, 0)],
                vec![NodeQuality::Low, NodeQuality::High, NodeQuality::High],
            ),
            4 => (
                vec![],
                vec![NodeQuality::High, NodeQuality::Medium, NodeQuality::Low],
            ),
            other => return Err(Error::BadSetting(format!("unknown setting {other}"))),
        };
        Ok(Self {
            setting_id,
            edges,
            quality,
            train_size: 5000,
            test_size: 1000,
            min_positives: 15,
            seed,
        })
    }

    pub fn graph(&self) -> LabelGraph {
        let labels = (0..self.quality.len())
            .map(|id| LabelRecord {
                id,
                name: format!("N{id}"),
            })
            .collect();
        LabelGraph::new(labels, self.edges.clone()).expect("settings are valid forests")
    }

    pub fn with_sizes(mut self, train: usize, test: usize) -> Self {
        self.train_size = train;
        self.test_size = test;
        self
    }
}

/// Per-label truth parameters: marginal prevalence at roots, conditional
/// positive rate under a positive parent elsewhere.
#[derive(Debug, Clone)]
pub struct TruthModel {
    pub root_prevalence: Vec<f64>,
    pub conditional: Vec<f64>,
}

impl TruthModel {
    /// Both root prevalences and conditionals drawn Uniform(0, 1).
    pub fn draw_uniform(graph: &LabelGraph, rng: &mut impl Rng) -> Self {
        let k = graph.label_count();
        Self {
            root_prevalence: (0..k).map(|_| rng.gen()).collect(),
            conditional: (0..k).map(|_| rng.gen()).collect(),
        }
    }
}

/// Draw hierarchy-consistent truth root-down: children can only be positive
/// under a positive parent.
pub fn draw_truth(
    graph: &LabelGraph,
    model: &TruthModel,
    samples: usize,
    rng: &mut impl Rng,
) -> Vec<bool> {
    let k = graph.label_count();
    // Parent-before-child order.
    let mut order = Vec::with_capacity(k);
    let mut stack: Vec<LabelId> = graph.roots().collect();
    while let Some(v) = stack.pop() {
        order.push(v);
        stack.extend_from_slice(graph.children(v));
    }
    let mut truth = vec![false; k * samples];
    for m in 0..samples {
        for &v in &order {
            let positive = match graph.parents(v) {
                [] => rng.gen_bool(model.root_prevalence[v]),
                [p] => truth[m * k + p] && rng.gen_bool(model.conditional[v]),
                _ => unreachable!("settings are forests"),
            };
            truth[m * k + v] = positive;
        }
    }
    truth
}

/// A generated dataset: dense score and truth tables in the
/// `sample * K + label` layout.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: LabelGraph,
    pub train_scores: Vec<f64>,
    pub train_truth: Vec<bool>,
    pub test_scores: Vec<f64>,
    pub test_truth: Vec<bool>,
    /// Accepted truth parameters (diagnostic).
    pub model: TruthModel,
    /// Truth draws rejected before the constraints held.
    pub attempts: usize,
}

const MAX_TRUTH_ATTEMPTS: usize = 10_000;

/// Generate one dataset: truth parameters and truth bits are redrawn until
/// every class has `min_positives` training positives, each half of the
/// training pool keeps at least two positives and two negatives per class
/// (the cutoff pipeline refits on halves), and the test set has a positive.
pub fn generate_dataset(setting: &SimSetting) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(setting.seed);
    generate_dataset_with(setting, &mut rng)
}

pub fn generate_dataset_with(setting: &SimSetting, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let graph = setting.graph();
    let k = graph.label_count();
    let train = setting.train_size;
    let test = setting.test_size;
    let total = train + test;

    let mut attempts = 0usize;
    let (model, truth) = loop {
        attempts += 1;
        if attempts > MAX_TRUTH_ATTEMPTS {
            return Err(Error::RetryExhausted {
                attempts: attempts - 1,
            });
        }
        let model = TruthModel::draw_uniform(&graph, rng);
        let truth = draw_truth(&graph, &model, total, rng);
        if truth_acceptable(&truth, k, train, test, setting.min_positives) {
            break (model, truth);
        }
    };

    let samplers: Vec<(BetaSampler<f64>, BetaSampler<f64>)> = setting
        .quality
        .iter()
        .map(|q| {
            let eta = q.eta();
            (
                BetaSampler::new(6.0, eta).expect("valid shape"),
                BetaSampler::new(eta, 6.0).expect("valid shape"),
            )
        })
        .collect();
    let mut scores = Vec::with_capacity(total * k);
    for m in 0..total {
        for v in 0..k {
            let (pos, neg) = &samplers[v];
            scores.push(if truth[m * k + v] {
                pos.sample(rng)
            } else {
                neg.sample(rng)
            });
        }
    }

    let split = train * k;
    Ok(Dataset {
        graph,
        train_scores: scores[..split].to_vec(),
        train_truth: truth[..split].to_vec(),
        test_scores: scores[split..].to_vec(),
        test_truth: truth[split..].to_vec(),
        model,
        attempts: attempts - 1,
    })
}

fn truth_acceptable(
    truth: &[bool],
    k: usize,
    train: usize,
    test: usize,
    min_positives: usize,
) -> bool {
    let half = train / 2;
    for v in 0..k {
        let mut train_pos = 0usize;
        let mut first_half_pos = 0usize;
        let mut second_half_pos = 0usize;
        for m in 0..train {
            if truth[m * k + v] {
                train_pos += 1;
                if m < half {
                    first_half_pos += 1;
                } else {
                    second_half_pos += 1;
                }
            }
        }
        if train_pos < min_positives {
            return false;
        }
        let need = 2usize;
        if first_half_pos < need
            || second_half_pos < need
            || half - first_half_pos < need
            || (train - half) - second_half_pos < need
        {
            return false;
        }
    }
    let test_pos = (0..test * k).filter(|&i| truth[train * k + i]).count();
    test_pos >= 1
}

/// Cutoff selection rule on the held-out training ranking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutoffCriterion {
    MaxF,
    PrecisionTarget(f64),
}

impl CutoffCriterion {
    pub fn name(&self) -> String {
        match self {
            CutoffCriterion::MaxF => "max_f".to_string(),
            CutoffCriterion::PrecisionTarget(p) => format!("precision_{:.0}", p * 100.0),
        }
    }
}

/// Chosen cutoff: the LPR at the selected prefix end.
#[derive(Debug, Clone, Copy)]
pub struct CutoffChoice {
    pub lpr_star: f64,
    /// 1-based prefix length on the selection ranking.
    pub cut_index: usize,
    /// Criterion value attained on the selection ranking.
    pub train_value: f64,
}

/// Pick the cutoff on a ranking with known truth: for a precision target,
/// the longest prefix with prefix precision >= p; for max-F, the prefix of
/// maximal F-measure.
///
/// `lpr_in_order` is the ranking's calling score per position. For
/// hierarchy-adjusted rankings pass the block-mean scores
/// ([`crate::hierarchy::Ranking::block_mean_in_order`]): raw LPRs are not
/// monotone along such rankings, so a raw-LPR threshold would not cut a
/// prefix. On plain sorted rankings the two coincide.
pub fn select_cutoff(
    lpr_in_order: &[f64],
    truth_in_order: &[bool],
    criterion: CutoffCriterion,
) -> Result<CutoffChoice> {
    assert_eq!(lpr_in_order.len(), truth_in_order.len());
    if lpr_in_order.is_empty() {
        return Err(Error::EmptyInput("cutoff selection needs a ranking"));
    }
    let total_positives = truth_in_order.iter().filter(|&&b| b).count();
    match criterion {
        CutoffCriterion::PrecisionTarget(p) => {
            let mut hits = 0usize;
            let mut best: Option<(usize, f64)> = None;
            for (i, &hit) in truth_in_order.iter().enumerate() {
                hits += usize::from(hit);
                let precision = hits as f64 / (i + 1) as f64;
                if precision >= p {
                    best = Some((i + 1, precision));
                }
            }
            let (cut_index, train_value) =
                best.ok_or(Error::UnattainableTarget { target: p })?;
            Ok(CutoffChoice {
                lpr_star: lpr_in_order[cut_index - 1],
                cut_index,
                train_value,
            })
        }
        CutoffCriterion::MaxF => {
            let mut best = (0.0f64, 1usize);
            for
                k in 1..=truth_in_order.len()
            {
                let f = f_measure_at(truth_in_order, k, total_positives);
                if f > best.0 {
                    best = (f, k);
                }
            }
            Ok(CutoffChoice {
                lpr_star: lpr_in_order[best.1 - 1],
                cut_index: best.1,
                train_value: best.0,
            })
        }
    }
}

/// Cut a ranking at a carried-over LPR value: everything up to the last
/// position whose LPR still meets the cutoff is called positive.
pub fn apply_cutoff(lpr_in_order: &[f64], lpr_star: f64) -> usize {
    lpr_in_order
        .iter()
        .rposition(|&v| v >= lpr_star)
        .map_or(0, |i| i + 1)
}

/// Outcome of carrying a training cutoff to a test ranking.
#[derive(Debug, Clone)]
pub struct CutoffResult {
    pub criterion: CutoffCriterion,
    pub lpr_star: f64,
    pub train_value: f64,
    /// Criterion value realized on the test ranking at the carried cutoff.
    pub test_value: f64,
    /// Target minus test value: the precision target, or the test set's own
    /// maximal F-measure for the max-F criterion.
    pub diff: f64,
    /// 1-based cut position on the test ranking (0: empty call set).
    pub test_cut_index: usize,
}

/// Evaluate a selected cutoff against a test ranking with known truth.
pub fn evaluate_cutoff(
    choice: &CutoffChoice,
    criterion: CutoffCriterion,
    test_lpr_in_order: &[f64],
    test_truth_in_order: &[bool],
) -> CutoffResult {
    let cut = apply_cutoff(test_lpr_in_order, choice.lpr_star);
    let total_positives = test_truth_in_order.iter().filter(|&&b| b).count();
    let (test_value, target) = match criterion {
        CutoffCriterion::PrecisionTarget(p) => {
            let precision = if cut == 0 {
                0.0
            } else {
                test_truth_in_order[..cut].iter().filter(|&&b| b).count() as f64 / cut as f64
            };
            (precision, p)
        }
        CutoffCriterion::MaxF => {
            let f_at_cut = if cut == 0 {
                0.0
            } else {
                f_measure_at(test_truth_in_order, cut, total_positives)
            };
            let best_f = (1..=test_truth_in_order.len())
                .map(|k| f_measure_at(test_truth_in_order, k, total_positives))
                .fold(0.0f64, f64::max);
            (f_at_cut, best_f)
        }
    };
    CutoffResult {
        criterion,
        lpr_star: choice.lpr_star,
        train_value: choice.train_value,
        test_value,
        diff: target - test_value,
        test_cut_index: cut,
    }
}

/// The Table-2 criteria: max-F plus the four precision targets.
pub fn standard_criteria() -> Vec<CutoffCriterion> {
    vec![
        CutoffCriterion::MaxF,
        CutoffCriterion::PrecisionTarget(0.80),
        CutoffCriterion::PrecisionTarget(0.90),
        CutoffCriterion::PrecisionTarget(0.95),
        CutoffCriterion::PrecisionTarget(0.99),
    ]
}

/// Per-criterion aggregate over replications, in percentage points.
#[derive(Debug, Clone)]
pub struct CriterionStats {
    pub criterion: CutoffCriterion,
    pub used: usize,
    /// Replications dropped because the target was unattainable in training.
    pub dropped: usize,
    pub mean_diff_pct: f64,
    pub sd_diff_pct: f64,
    pub mean_abs_diff_pct: f64,
}

/// One replication's cutoff outcomes (None: dropped).
#[derive(Debug, Clone)]
pub struct RepRecord {
    pub rep: usize,
    pub outcomes: Vec<Option<CutoffResult>>,
}

/// Replication study output: Table-2-shaped statistics plus vertically
/// averaged test PR curves for the hierarchy ranking and the plain LPR
/// sort.
#[derive(Debug, Clone)]
pub struct ReplicationSummary {
    pub setting_id: u8,
    pub reps: usize,
    pub criteria: Vec<CriterionStats>,
    pub records: Vec<RepRecord>,
    pub pr_hier: Vec<(f64, f64)>,
    pub pr_lpr_only: Vec<(f64, f64)>,
}

/// Recall grid size for the averaged PR curves.
pub const PR_GRID: usize = 200;

/// Run `n_reps` replications of a setting: generate data, fit LPR curves on
/// half the training pool, choose cutoffs on the other half, and evaluate
/// on the test set. Replication `r` is seeded with `setting.seed + r`.
pub fn run_replication_study(setting: &SimSetting, n_reps: usize) -> Result<ReplicationSummary> {
    assert!(n_reps >= 2, "need at least two replications");
    let criteria = standard_criteria();
    let mut records = Vec::with_capacity(n_reps);
    let mut hier_curves = Vec::with_capacity(n_reps);
    let mut lpr_only_curves = Vec::with_capacity(n_reps);

    for rep in 0..n_reps {
        let rep_setting = SimSetting {
            seed: setting.seed + rep as u64,
            ..setting.clone()
        };
        let outcome = run_single_replication(&rep_setting, &criteria)?;
        records.push(RepRecord {
            rep,
            outcomes: outcome.cutoffs,
        });
        hier_curves.push(outcome.pr_hier);
        lpr_only_curves.push(outcome.pr_lpr_only);
    }

    let criteria_stats = criteria
        .iter()
        .enumerate()
        .map(|(ci, &criterion)| {
            let diffs: Vec<f64> = records
                .iter()
                .filter_map(|r| r.outcomes[ci].as_ref().map(|o| o.diff * 100.0))
                .collect();
            let used = diffs.len();
            let dropped = n_reps - used;
            let mean = if used > 0 {
                diffs.iter().sum::<f64>() / used as f64
            } else {
                f64::NAN
            };
            let sd = if used > 1 {
                (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (used - 1) as f64).sqrt()
            } else {
                f64::NAN
            };
            let mean_abs = if used > 0 {
                diffs.iter().map(|d| d.abs()).sum::<f64>() / used as f64
            } else {
                f64::NAN
            };
            CriterionStats {
                criterion,
                used,
                dropped,
                mean_diff_pct: mean,
                sd_diff_pct: sd,
                mean_abs_diff_pct: mean_abs,
            }
        })
        .collect();

    Ok(ReplicationSummary {
        setting_id: setting.setting_id,
        reps: n_reps,
        criteria: criteria_stats,
        records,
        pr_hier: average_pr_curves(&hier_curves, PR_GRID),
        pr_lpr_only: average_pr_curves(&lpr_only_curves, PR_GRID),
    })
}

struct SingleRep {
    cutoffs: Vec<Option<CutoffResult>>,
    pr_hier: Vec<(f64, f64)>,
    pr_lpr_only: Vec<(f64, f64)>,
}

fn run_single_replication(
    setting: &SimSetting,
    criteria: &[CutoffCriterion],
) -> Result<SingleRep> {
    let data = generate_dataset(setting)?;
    let k = data.graph.label_count();
    let half = setting.train_size / 2;

    // Fit LPR curves on the first half of the training pool.
    let fit_scores = &data.train_scores[..half * k];
    let fit_truth = &data.train_truth[..half * k];
    let columns: Vec<ScoreColumn> = (0..k)
        .map(|v| {
            let scores: Vec<f64> = (0..half).map(|m| fit_scores[m * k + v]).collect();
            let truth: Vec<bool> = (0..half).map(|m| fit_truth[m * k + v]).collect();
            ScoreColumn::new(v, scores, truth)
        })
        .collect::<Result<_>>()?;
    let estimator = LprEstimator::fit(&columns, k, None, 256)?;

    // Select cutoffs on the second half.
    let select_scores = &data.train_scores[half * k..];
    let select_truth = &data.train_truth[half * k..];
    let select_lpr = estimator.apply_dense(select_scores, k)?;
    let select_forest = InstanceForest::new(
        data.graph.clone(),
        setting.train_size - half,
        select_lpr,
        Some(select_truth.to_vec()),
    )?;
    let select_ranking = hier_lpr_fast(&select_forest);
    let select_call_scores = select_ranking.block_mean_in_order();
    let select_truth_in_order = select_ranking
        .truth_in_order(&select_forest)
        .expect("truth present");

    // Test rankings: hierarchy-aware and plain LPR sort.
    let test_lpr = estimator.apply_dense(&data.test_scores, k)?;
    let test_forest = InstanceForest::new(
        data.graph.clone(),
        setting.test_size,
        test_lpr.clone(),
        Some(data.test_truth.clone()),
    )?;
    let test_ranking = hier_lpr_fast(&test_forest);
    let test_call_scores = test_ranking.block_mean_in_order();
    let test_truth_in_order = test_ranking
        .truth_in_order(&test_forest)
        .expect("truth present");

    let mut lpr_only_order: Vec<usize> = (0..test_lpr.len()).collect();
    lpr_only_order.sort_by(|&a, &b| {
        test_lpr[b]
            .partial_cmp(&test_lpr[a])
            .expect("finite LPRs")
            .then(a.cmp(&b))
    });
    let lpr_only_truth: Vec<bool> = lpr_only_order.iter().map(|&i| data.test_truth[i]).collect();

    let total_test_positives = data.test_truth.iter().filter(|&&b| b).count();
    let pr_hier = pr_curve(&test_truth_in_order, total_test_positives)?;
    let pr_lpr_only = pr_curve(&lpr_only_truth, total_test_positives)?;

    let cutoffs = criteria
        .iter()
        .map(|&criterion| {
            match select_cutoff(&select_call_scores, &select_truth_in_order, criterion) {
                Ok(choice) => Ok(Some(evaluate_cutoff(
                    &choice,
                    criterion,
                    &test_call_scores,
                    &test_truth_in_order,
                ))),
                Err(Error::UnattainableTarget { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    Ok(SingleRep {
        cutoffs,
        pr_hier,
        pr_lpr_only,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_have_table_shapes() {
        for id in 1..=4 {
            let s = SimSetting::standard(id, 1).unwrap();
            assert_eq!(s.quality.len(), 3);
            assert_eq!(s.train_size, 5000);
            assert_eq!(s.test_size, 1000);
            assert_eq!(s.min_positives, 15);
        }
        assert!(SimSetting::standard(5, 1).is_err());
        // Setting 4 is hierarchy-free.
        assert!(SimSetting::standard(4, 1).unwrap().edges.is_empty());
    }

    #[test]
    fn generated_truth_is_hierarchy_consistent_and_constrained() {
        let setting = SimSetting::standard(1, 99)
            .unwrap()
            .with_sizes(600, 100);
        let data = generate_dataset(&setting).unwrap();
        let k = data.graph.label_count();
        // InstanceForest validates hierarchy consistency of the truth.
        let lpr = vec![0.5; setting.train_size * k];
        InstanceForest::new(
            data.graph.clone(),
            setting.train_size,
            lpr,
            Some(data.train_truth.clone()),
        )
        .unwrap();
        for v in 0..k {
            let pos = (0..setting.train_size)
                .filter(|&m| data.train_truth[m * k + v])
                .count();
            assert!(pos >= setting.min_positives);
        }
    }

    #[test]
    fn degenerate_root_passes_conditional_rate_to_children() {
        let setting = SimSetting::standard(1, 3).unwrap();
        let graph = setting.graph();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = TruthModel {
            root_prevalence: vec![1.0, 0.0, 0.0],
            conditional: vec![0.0, 0.3, 0.0],
        };
        let samples = 200_000;
        let truth = draw_truth(&graph, &model, samples, &mut rng);
        let k = graph.label_count();
        let root_rate = (0..samples).filter(|&m| truth[m * k]).count() as f64 / samples as f64;
        assert_eq!(root_rate, 1.0);
        let child_rate =
            (0..samples).filter(|&m| truth[m * k + 1]).count() as f64 / samples as f64;
        assert!((child_rate - 0.3).abs() < 0.01);
    }

    #[test]
    fn high_quality_positive_scores_have_beta_mean() {
        // Beta(6, 2) mean is 6/8 = 0.75.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sampler = BetaSampler::new(6.0, 2.0).unwrap();
        let n = 100_000;
        let mean = (0..n).map(|_| sampler.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.75).abs() < 0.01);
    }

    #[test]
    fn cutoff_worked_example() {
        let lpr = [0.9, 0.8, 0.6, 0.5];
        let truth = [true, true, false, true];
        let choice =
            select_cutoff(&lpr, &truth, CutoffCriterion::PrecisionTarget(0.9)).unwrap();
        // Prefix precisions 1, 1, 2/3, 3/4: longest prefix meeting 0.9 ends
        // at position 2, so the cutoff is that position's LPR.
        assert_eq!(choice.cut_index, 2);
        assert_eq!(choice.lpr_star, 0.8);
        assert_eq!(choice.train_value, 1.0);
    }

    #[test]
    fn cutoff_all_positive_prefix_attains_high_target() {
        let lpr = [0.9, 0.8, 0.7];
        let truth = [true, true, true];
        let choice =
            select_cutoff(&lpr, &truth, CutoffCriterion::PrecisionTarget(0.99)).unwrap();
        assert_eq!(choice.cut_index, 3);
        assert_eq!(choice.lpr_star, 0.7);
    }

    #[test]
    fn cutoff_all_negative_is_unattainable() {
        let lpr = [0.9, 0.8];
        let truth = [false, false];
        assert!(matches!(
            select_cutoff(&lpr, &truth, CutoffCriterion::PrecisionTarget(0.5)).unwrap_err(),
            Error::UnattainableTarget { .. }
        ));
    }

    #[test]
    fn max_f_cutoff_picks_the_argmax_prefix() {
        let lpr = [0.9, 0.8, 0.6, 0.5];
        let truth = [true, true, false, true];
        let choice = select_cutoff(&lpr, &truth, CutoffCriterion::MaxF).unwrap();
        // F at k=2: p=1, r=2/3 -> 0.8; F at k=4: p=3/4, r=1 -> 6/7 ~ 0.857.
        assert_eq!(choice.cut_index, 4);
        assert!((choice.train_value - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn apply_cutoff_takes_last_qualifying_position() {
        // Rankings are not LPR-sorted; the call set is the prefix through
        // the last position meeting the cutoff.
        assert_eq!(apply_cutoff(&[0.9, 0.3, 0.8, 0.2], 0.8), 3);
        assert_eq!(apply_cutoff(&[0.9, 0.3], 0.95), 0);
        assert_eq!(apply_cutoff(&[0.9, 0.3], 0.1), 2);
    }

    #[test]
    fn smoke_replication_study_emits_curves() {
        let setting = SimSetting::standard(1, 77)
            .unwrap()
            .with_sizes(400, 120);
        let summary = run_replication_study(&setting, 2).unwrap();
        assert_eq!(summary.reps, 2);
        assert_eq!(summary.pr_hier.len(), PR_GRID);
        assert_eq!(summary.pr_lpr_only.len(), PR_GRID);
        assert_eq!(summary.criteria.len(), 5);
        assert_eq!(summary.records.len(), 2);
        // The max-F criterion never drops.
        assert_eq!(summary.criteria[0].dropped, 0);
    }

    #[test]
    fn standalone_setting_ranking_is_descending_sort() {
        let setting = SimSetting::standard(4, 13)
            .unwrap()
            .with_sizes(300, 80);
        let data = generate_dataset(&setting).unwrap();
        let k = data.graph.label_count();
        let columns: Vec<ScoreColumn> = (0..k)
            .map(|v| {
                let scores: Vec<f64> =
                    (0..setting.train_size).map(|m| data.train_scores[m * k + v]).collect();
                let truth: Vec<bool> =
                    (0..setting.train_size).map(|m| data.train_truth[m * k + v]).collect();
                ScoreColumn::new(v, scores, truth).unwrap()
            })
            .collect();
        let estimator = LprEstimator::fit(&columns, k, None, 128).unwrap();
        let test_lpr = estimator.apply_dense(&data.test_scores, k).unwrap();
        let forest =
            InstanceForest::new(data.graph.clone(), setting.test_size, test_lpr.clone(), None)
                .unwrap();
        let ranking = hier_lpr_fast(&forest);
        let mut expected: Vec<usize> = (0..test_lpr.len()).collect();
        expected.sort_by(|&a, &b| {
            test_lpr[b]
                .partial_cmp(&test_lpr[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        assert_eq!(ranking.order, expected);
    }
}

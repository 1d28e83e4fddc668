//! Command-line interface: rank instances under a hierarchy, estimate LPRs
//! from classifier scores, evaluate rankings, run the synthetic benchmark,
//! select cutoffs, and run the embedded self-test suite.
//!
//! Exit codes: 0 success, 2 input/validation error, 3 unattainable cutoff
//! target, 1 anything else. All artifacts are written atomically (temp file
//! plus rename). No environment variables are consulted; all randomness
//! flows from explicit `--seed` flags.

use std::fs::{self, File};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use hierlpr::dag::{rank_dag, RankAlgo, DEFAULT_SPLIT_CAP};
use hierlpr::error::Error as LibError;
use hierlpr::experiments::{
    evaluate_cutoff, run_replication_study, select_cutoff, CutoffCriterion, SimSetting,
};
use hierlpr::hierarchy::{GraphKind, InstanceForest, Ranking};
use hierlpr::io::{
    read_hierarchy, read_ranking, read_scores, write_hit_curve, write_pr_curve, write_pr_pair,
    write_ranking, write_scores, CurveSummary, ScoreTable,
};
use hierlpr::lpr::{DensityModel, LprEstimator, ScoreColumn};
use hierlpr::metrics::CurveSet;
use hierlpr::ranker::brute_force_optimal;
use hierlpr::selftest::{self, SelfTestConfig};

const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\nalgorithms:\n",
    "  naive  reference bottom-up chain merging\n",
    "  fast   block-level merge, O(n log n)\n",
    "  cssa   supernode condensation\n",
    "  brute  exact subset-DP oracle (n <= 20)\n",
);

#[derive(Parser)]
#[command(name = "hierlpr", version, long_version = LONG_VERSION, about)]
struct Cli {
    /// Cap worker threads for per-sample stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Emit a single JSON summary object on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank all (sample, label) instances of an LPR table under a hierarchy.
    Rank(RankArgs),
    /// Estimate LPR values from training classifier scores.
    EstimateLpr(EstimateArgs),
    /// Hit curve, PR curve, and summary for a ranking against truth.
    Curves(CurvesArgs),
    /// Run replications of a synthetic benchmark setting.
    Simulate(SimulateArgs),
    /// Select an LPR cutoff on a ranking with truth; optionally evaluate it.
    Cutoff(CutoffArgs),
    /// Run the embedded verification suite.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct RankArgs {
    /// Hierarchy CSV (label_id,parent_id,name).
    #[arg(long)]
    hierarchy: PathBuf,
    /// LPR table CSV (sample_id,label_id,value[,truth]).
    #[arg(long)]
    lpr: PathBuf,
    /// Output ranking CSV (rank,sample_id,label_id,lpr,block_id).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgoArg::Fast)]
    algo: AlgoArg,
    /// Enable split enumeration for multi-parent hierarchies.
    #[arg(long)]
    dag: bool,
    /// Cap on the number of enumerated splits.
    #[arg(long, default_value_t = DEFAULT_SPLIT_CAP)]
    split_cap: u128,
    /// Sidecar JSON with the winning parent assignment (default:
    /// `<out>.split.json`).
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    Naive,
    Fast,
    Cssa,
    Brute,
}

#[derive(Args)]
struct EstimateArgs {
    /// Training scores CSV with a truth column.
    #[arg(long)]
    train: PathBuf,
    /// Scores to map through the fitted curves (default: the training
    /// scores themselves).
    #[arg(long)]
    apply: Option<PathBuf>,
    /// Output LPR CSV in the score-table format.
    #[arg(long)]
    out: PathBuf,
    /// Smoothing bandwidth on the percentile axis, or `auto`.
    #[arg(long, default_value = "auto")]
    bandwidth: String,
    /// Evaluation grid size.
    #[arg(long, default_value_t = 512)]
    grid: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Smooth)]
    method: MethodArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Local quadratic smoothing of the precision curve.
    Smooth,
    /// Plug-in local true discovery rate from kernel density estimates.
    Ltdr,
}

#[derive(Args)]
struct CurvesArgs {
    /// Ranking CSV produced by `rank`.
    #[arg(long)]
    ranking: PathBuf,
    /// Truth table CSV (sample_id,label_id,value,truth).
    #[arg(long)]
    truth: PathBuf,
    /// Directory for hit.csv, pr.csv, summary.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Benchmark setting (1-4).
    #[arg(long)]
    setting: u8,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for reps.csv, table2.json, pr_avg.csv.
    #[arg(long)]
    out_dir: PathBuf,
    /// Training samples per replication.
    #[arg(long, default_value_t = 5000)]
    train_size: usize,
    /// Test samples per replication.
    #[arg(long, default_value_t = 1000)]
    test_size: usize,
}

#[derive(Args)]
struct CutoffArgs {
    /// Selection ranking CSV (with truth below).
    #[arg(long)]
    ranking: PathBuf,
    /// Truth table for the selection ranking.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, value_enum)]
    criterion: CriterionArg,
    /// Precision target for `--criterion precision`.
    #[arg(long, default_value_t = 0.9)]
    target: f64,
    /// Test ranking to evaluate the carried cutoff on.
    #[arg(long, requires = "test_truth")]
    test_ranking: Option<PathBuf>,
    /// Truth table for the test ranking.
    #[arg(long, requires = "test_ranking")]
    test_truth: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionArg {
    Maxf,
    Precision,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fault injection: reverse the condensation ranker's tie rule. The
    /// sequence property must fail while the eAUC properties hold.
    #[arg(long, hide = true)]
    corrupt_tie_rule: bool,
}

enum CliError {
    /// Bad inputs or configuration: exit 2.
    Validation(String),
    /// No cutoff attains the requested target: exit 3.
    Unattainable(String),
    /// Everything else: exit 1.
    Other(String),
}

impl From<LibError> for CliError {
    fn from(e: LibError) -> Self {
        match e {
            LibError::UnattainableTarget { .. } => CliError::Unattainable(e.to_string()),
            LibError::Io(_) => CliError::Other(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn validation(msg: impl ToString) -> CliError {
    CliError::Validation(msg.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore the error when a pool already exists (repeated in-process
        // invocations under tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let outcome = match &cli.command {
        Command::Rank(args) => cmd_rank(args, cli.json),
        Command::EstimateLpr(args) => cmd_estimate(args, cli.json),
        Command::Curves(args) => cmd_curves(args, cli.json),
        Command::Simulate(args) => cmd_simulate(args, cli.json),
        Command::Cutoff(args) => cmd_cutoff(args, cli.json),
        Command::Selftest(args) => cmd_selftest(args, cli.json),
    };
    match outcome {
        Ok(code) => code,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Unattainable(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn open_file(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| validation(format!("{}: {e}", path.display())))
}

fn write_atomic(
    path: &Path,
    write: impl FnOnce(&mut dyn std::io::Write) -> CliResult<()>,
) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Other(format!("creating {}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .map_err(|e| CliError::Other(format!("temp file in {}: {e}", dir.display())))?;
    write(tmp.as_file_mut())?;
    tmp.as_file_mut()
        .flush()
        .map_err(|e| CliError::Other(e.to_string()))?;
    tmp.persist(path)
        .map_err(|e| CliError::Other(format!("renaming into {}: {e}", path.display())))?;
    Ok(())
}

/// Scan a scores CSV for `max(label_id) + 1`.
fn infer_label_count(path: &Path) -> CliResult<usize> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(open_file(path)?);
    let mut max_label = None::<usize>;
    for record in reader.records() {
        let record = record.map_err(|e| validation(format!("{}: {e}", path.display())))?;
        if let Some(field) = record.get(1) {
            if let Ok(label) = field.trim().parse::<usize>() {
                max_label = Some(max_label.map_or(label, |m: usize| m.max(label)));
            }
        }
    }
    max_label
        .map(|m| m + 1)
        .ok_or_else(|| validation(format!("{}: no rows", path.display())))
}

fn load_scores(path: &Path, label_count: usize) -> CliResult<ScoreTable> {
    read_scores(open_file(path)?, label_count)
        .map_err(|e| validation(format!("{}: {e}", path.display())))
}

fn emit(json_mode: bool, summary: serde_json::Value, human: impl FnOnce()) {
    if json_mode {
        println!(
            "{}",
            serde_json::to_string_pretty(&summary).expect("serializable summary")
        );
    } else {
        human();
    }
}

fn cmd_rank(args: &RankArgs, json_mode: bool) -> CliResult<ExitCode> {
    let graph = read_hierarchy(open_file(&args.hierarchy)?)
        .map_err(|e| validation(format!("{}: {e}", args.hierarchy.display())))?;
    let table = load_scores(&args.lpr, graph.label_count())?;

    let (ranking, dag_sidecar): (Ranking, Option<serde_json::Value>) = if args.dag {
        let algo = match args.algo {
            AlgoArg::Naive => RankAlgo::Naive,
            AlgoArg::Fast => RankAlgo::Fast,
            AlgoArg::Cssa => RankAlgo::Cssa,
            AlgoArg::Brute => {
                return Err(validation("--algo brute is not supported with --dag"))
            }
        };
        let result = rank_dag(
            &graph,
            table.sample_count(),
            &table.values,
            algo,
            args.split_cap,
        )?;
        let assignment: Vec<serde_json::Value> = result
            .multi_parent_labels
            .iter()
            .zip(&result.assignment)
            .map(|(&label, &pick)| {
                json!({
                    "label_id": label,
                    "chosen_parent_id": graph.parents(label)[pick],
                })
            })
            .collect();
        let sidecar = json!({
            "eauc": result.eauc,
            "assignment": assignment,
            "and_violation_count": result.and_violations.len(),
        });
        (result.ranking, Some(sidecar))
    } else {
        if graph.kind() == GraphKind::TreeLikeDag {
            return Err(validation(
                "hierarchy has multi-parent labels; pass --dag to enable split enumeration",
            ));
        }
        let forest = InstanceForest::new(
            graph.clone(),
            table.sample_count(),
            table.values.clone(),
            table.truth.clone(),
        )?;
        let ranking = match args.algo {
            AlgoArg::Naive => RankAlgo::Naive.rank(&forest),
            AlgoArg::Fast => RankAlgo::Fast.rank(&forest),
            AlgoArg::Cssa => RankAlgo::Cssa.rank(&forest),
            AlgoArg::Brute => brute_force_optimal(&forest)?.ranking,
        };
        (ranking, None)
    };

    write_atomic(&args.out, |w| {
        write_ranking(w, &ranking, &table.sample_ids, graph.label_count()).map_err(CliError::from)
    })?;
    if let Some(sidecar) = &dag_sidecar {
        let path = args
            .sidecar
            .clone()
            .unwrap_or_else(|| sidecar_path(&args.out));
        write_atomic(&path, |w| {
            serde_json::to_writer_pretty(&mut *w, sidecar)
                .map_err(|e| CliError::Other(e.to_string()))?;
            writeln!(w).map_err(|e| CliError::Other(e.to_string()))
        })?;
    }

    let eauc = hierlpr::metrics::eauc(&ranking.lpr_in_order);
    let blocks: Vec<serde_json::Value> = ranking
        .blocks
        .iter()
        .map(|b| json!({"start": b.start, "len": b.len, "sum_lpr": b.sum_lpr}))
        .collect();
    let mut summary = json!({
        "n": ranking.len(),
        "algorithm": ranking.algorithm,
        "tie_policy": ranking.tie_policy,
        "eauc": eauc,
        "block_count": ranking.blocks.len(),
        "blocks": blocks,
        "out": args.out.display().to_string(),
    });
    if let Some(sidecar) = dag_sidecar {
        summary["dag"] = sidecar;
    }
    emit(json_mode, summary, || {
        println!(
            "ranked {} instances with {} ({} blocks), eAUC {eauc}",
            ranking.len(),
            ranking.algorithm,
            ranking.blocks.len(),
        );
    });
    Ok(ExitCode::SUCCESS)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".split.json");
    out.with_file_name(name)
}

fn cmd_estimate(args: &EstimateArgs, json_mode: bool) -> CliResult<ExitCode> {
    let label_count = infer_label_count(&args.train)?;
    let train = load_scores(&args.train, label_count)?;
    let truth = train
        .truth
        .as_ref()
        .ok_or_else(|| validation("training scores need a truth column"))?;
    let bandwidth = match args.bandwidth.as_str() {
        "auto" => None,
        other => Some(
            other
                .parse::<f64>()
                .map_err(|e| validation(format!("--bandwidth: {e}")))?,
        ),
    };
    if args.grid < 10 {
        return Err(validation("--grid must be at least 10"));
    }

    let columns: Vec<ScoreColumn> = (0..label_count)
        .map(|v| {
            let scores: Vec<f64> = (0..train.sample_count())
                .map(|m| train.values[m * label_count + v])
                .collect();
            let bits: Vec<bool> = (0..train.sample_count())
                .map(|m| truth[m * label_count + v])
                .collect();
            ScoreColumn::new(v, scores, bits)
        })
        .collect::<Result<_, _>>()?;

    let apply_table = match &args.apply {
        Some(path) => load_scores(path, label_count)?,
        None => train.clone(),
    };

    let lpr_values = match args.method {
        MethodArg::Smooth => {
            let estimator = LprEstimator::fit(&columns, label_count, bandwidth, args.grid)?;
            estimator.apply_dense(&apply_table.values, label_count)?
        }
        MethodArg::Ltdr => {
            let models: Vec<DensityModel> = columns
                .iter()
                .map(DensityModel::fit_kde)
                .collect::<Result<_, _>>()?;
            apply_table
                .values
                .iter()
                .enumerate()
                .map(|(i, &s)| hierlpr::lpr::lpr_from_densities(&models[i % label_count], s))
                .collect::<Result<_, _>>()?
        }
    };

    let out_table = ScoreTable {
        sample_ids: apply_table.sample_ids.clone(),
        label_count,
        values: lpr_values,
        truth: apply_table.truth.clone(),
    };
    write_atomic(&args.out, |w| {
        write_scores(w, &out_table).map_err(CliError::from)
    })?;

    let summary = json!({
        "labels": label_count,
        "train_samples": train.sample_count(),
        "applied_samples": out_table.sample_count(),
        "method": match args.method { MethodArg::Smooth => "smooth", MethodArg::Ltdr => "ltdr" },
        "grid": args.grid,
        "bandwidth": args.bandwidth,
        "out": args.out.display().to_string(),
    });
    emit(json_mode, summary, || {
        println!(
            "estimated LPRs for {} labels, wrote {} rows to {}",
            label_count,
            out_table.sample_count() * label_count,
            args.out.display()
        );
    });
    Ok(ExitCode::SUCCESS)
}

fn cmd_curves(args: &CurvesArgs, json_mode: bool) -> CliResult<ExitCode> {
    let rows = read_ranking(open_file(&args.ranking)?)
        .map_err(|e| validation(format!("{}: {e}", args.ranking.display())))?;
    let label_count = infer_label_count(&args.truth)?;
    let truth_table = load_scores(&args.truth, label_count)?;
    let truth = truth_table
        .truth
        .as_ref()
        .ok_or_else(|| validation("truth table needs a truth column"))?;

    let mut truth_in_order = Vec::with_capacity(rows.len());
    let mut lpr_in_order = Vec::with_capacity(rows.len());
    for row in &rows {
        let sample = truth_table.sample_index(row.sample_id).ok_or_else(|| {
            validation(format!(
                "sample {} not present in truth table",
                row.sample_id
            ))
        })?;
        if row.label_id >= label_count {
            return Err(validation(format!(
                "label {} not present in truth table",
                row.label_id
            )));
        }
        truth_in_order.push(truth[sample * label_count + row.label_id]);
        lpr_in_order.push(row.lpr);
    }

    let curves = CurveSet::compute(&truth_in_order, &lpr_in_order)?;
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Other(format!("{}: {e}", args.out_dir.display())))?;
    write_atomic(&args.out_dir.join("hit.csv"), |w| {
        write_hit_curve(w, &curves.hit_curve).map_err(CliError::from)
    })?;
    write_atomic(&args.out_dir.join("pr.csv"), |w| {
        write_pr_curve(w, &curves.pr_curve).map_err(CliError::from)
    })?;
    let summary = CurveSummary::from(&curves);
    write_atomic(&args.out_dir.join("summary.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &summary)
            .map_err(|e| CliError::Other(e.to_string()))?;
        writeln!(w).map_err(|e| CliError::Other(e.to_string()))
    })?;

    let value = serde_json::to_value(&summary).expect("serializable");
    emit(json_mode, value, || {
        println!(
            "eAUC {} hit-AUC {} max-F {:.4} at cut {} ({} calls)",
            summary.eauc,
            summary.hit_auc,
            summary.max_f,
            summary.cut_index,
            curves.hit_curve.len()
        );
    });
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: &SimulateArgs, json_mode: bool) -> CliResult<ExitCode> {
    if args.reps < 2 {
        return Err(validation("--reps must be at least 2"));
    }
    let setting = SimSetting::standard(args.setting, args.seed)?
        .with_sizes(args.train_size, args.test_size);
    let summary = run_replication_study(&setting, args.reps)?;

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Other(format!("{}: {e}", args.out_dir.display())))?;
    write_atomic(&args.out_dir.join("reps.csv"), |w| {
        let mut csv = csv::Writer::from_writer(w);
        let head = [
            "rep",
            "criterion",
            "lpr_star",
            "train_value",
            "test_value",
            "diff_pct",
            "test_cut_index",
        ];
        csv.write_record(head)
            .map_err(|e| CliError::Other(e.to_string()))?;
        for record in &summary.records {
            for outcome in record.outcomes.iter().flatten() {
                csv.write_record([
                    record.rep.to_string(),
                    outcome.criterion.name(),
                    outcome.lpr_star.to_string(),
                    outcome.train_value.to_string(),
                    outcome.test_value.to_string(),
                    (outcome.diff * 100.0).to_string(),
                    outcome.test_cut_index.to_string(),
                ])
                .map_err(|e| CliError::Other(e.to_string()))?;
            }
        }
        csv.flush().map_err(|e| CliError::Other(e.to_string()))?;
        Ok(())
    })?;

    let table: Vec<serde_json::Value> = summary
        .criteria
        .iter()
        .map(|c| {
            json!({
                "criterion": c.criterion.name(),
                "used": c.used,
                "dropped": c.dropped,
                "mean_diff_pct": c.mean_diff_pct,
                "sd_diff_pct": c.sd_diff_pct,
                "mean_abs_diff_pct": c.mean_abs_diff_pct,
            })
        })
        .collect();
    write_atomic(&args.out_dir.join("table2.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &table)
            .map_err(|e| CliError::Other(e.to_string()))?;
        writeln!(w).map_err(|e| CliError::Other(e.to_string()))
    })?;
    write_atomic(&args.out_dir.join("pr_avg.csv"), |w| {
        write_pr_pair(w, &summary.pr_hier, &summary.pr_lpr_only).map_err(CliError::from)
    })?;

    let value = json!({
        "setting": summary.setting_id,
        "reps": summary.reps,
        "criteria": table,
        "out_dir": args.out_dir.display().to_string(),
    });
    emit(json_mode, value, || {
        println!(
            "setting {} x {} reps -> {}",
            summary.setting_id,
            summary.reps,
            args.out_dir.display()
        );
        for c in &summary.criteria {
            println!(
                "  {:>14}: mean diff {:+.2} pp (sd {:.2}), {} used, {} dropped",
                c.criterion.name(),
                c.mean_diff_pct,
                c.sd_diff_pct,
                c.used,
                c.dropped
            );
        }
    });
    Ok(ExitCode::SUCCESS)
}

/// Calling scores (block means) and truth bits of a ranking CSV, in rank
/// order. Raw LPRs are not monotone along hierarchy-adjusted rankings, so
/// cutoffs operate on each position's block mean.
fn ordered_scores_and_truth(
    ranking_path: &Path,
    truth_path: &Path,
) -> CliResult<(Vec<f64>, Vec<bool>)> {
    let rows = read_ranking(open_file(ranking_path)?)
        .map_err(|e| validation(format!("{}: {e}", ranking_path.display())))?;
    let label_count = infer_label_count(truth_path)?;
    let table = load_scores(truth_path, label_count)?;
    let truth = table
        .truth
        .as_ref()
        .ok_or_else(|| validation("truth table needs a truth column"))?;
    let mut block_sums: std::collections::HashMap<usize, (f64, usize)> =
        std::collections::HashMap::new();
    for row in &rows {
        let entry = block_sums.entry(row.block_id).or_insert((0.0, 0));
        entry.0 += row.lpr;
        entry.1 += 1;
    }
    let mut scores = Vec::with_capacity(rows.len());
    let mut bits = Vec::with_capacity(rows.len());
    for row in &rows {
        let sample = table.sample_index(row.sample_id).ok_or_else(|| {
            validation(format!(
                "sample {} not present in truth table",
                row.sample_id
            ))
        })?;
        let (sum, count) = block_sums[&row.block_id];
        scores.push(sum / count as f64);
        bits.push(truth[sample * label_count + row.label_id]);
    }
    Ok((scores, bits))
}

fn cmd_cutoff(args: &CutoffArgs, json_mode: bool) -> CliResult<ExitCode> {
    let criterion = match args.criterion {
        CriterionArg::Maxf => CutoffCriterion::MaxF,
        CriterionArg::Precision => {
            if !(0.0..=1.0).contains(&args.target) {
                return Err(validation("--target must lie in [0, 1]"));
            }
            CutoffCriterion::PrecisionTarget(args.target)
        }
    };
    let (scores, truth) = ordered_scores_and_truth(&args.ranking, &args.truth)?;
    let choice = select_cutoff(&scores, &truth, criterion)?;

    let mut summary = json!({
        "criterion": criterion.name(),
        "lpr_star": choice.lpr_star,
        "cut_index": choice.cut_index,
        "train_value": choice.train_value,
    });
    let mut test_line = String::new();
    if let (Some(test_ranking), Some(test_truth)) = (&args.test_ranking, &args.test_truth) {
        let (test_lpr, test_bits) = ordered_scores_and_truth(test_ranking, test_truth)?;
        let result = evaluate_cutoff(&choice, criterion, &test_lpr, &test_bits);
        summary["test_value"] = json!(result.test_value);
        summary["diff"] = json!(result.diff);
        summary["test_cut_index"] = json!(result.test_cut_index);
        test_line = format!(
            "; test value {:.4} (diff {:+.2} pp at cut {})",
            result.test_value,
            result.diff * 100.0,
            result.test_cut_index
        );
    }
    emit(json_mode, summary, || {
        println!(
            "{}: LPR* = {} at cut {} (train value {:.4}){}",
            criterion.name(),
            choice.lpr_star,
            choice.cut_index,
            choice.train_value,
            test_line
        );
    });
    Ok(ExitCode::SUCCESS)
}

fn cmd_selftest(args: &SelftestArgs, json_mode: bool) -> CliResult<ExitCode> {
    let report = selftest::run(&SelfTestConfig {
        trials: args.trials,
        seed: args.seed,
        corrupt_tie_rule: args.corrupt_tie_rule,
        ..Default::default()
    });
    let entries: Vec<serde_json::Value> = report
        .entries
        .iter()
        .map(|e| json!({"name": e.name, "passed": e.passed, "detail": e.detail}))
        .collect();
    let value = json!({
        "passed": report.all_passed(),
        "entries": entries,
    });
    emit(json_mode, value, || {
        for entry in &report.entries {
            println!(
                "{} {:<35} {}",
                if entry.passed { "PASS" } else { "FAIL" },
                entry.name,
                entry.detail
            );
        }
    });
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

//! Shared error type for the library.

use thiserror::Error;

/// Errors produced by graph construction, estimation, ranking, and the
/// simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("label graph contains a directed cycle involving label {0}")]
    Cycle(usize),
    #[error("label ids are not unique and dense in [0, {expected}): {detail}")]
    BadLabelIds { expected: usize, detail: String },
    #[error("missing score for sample {sample}, label {label}")]
    MissingScore { sample: usize, label: usize },
    #[error("duplicate score for sample {sample}, label {label}")]
    DuplicateScore { sample: usize, label: usize },
    #[error("score {value} for sample {sample}, label {label} is not finite or outside [0, 1]")]
    BadScore {
        sample: usize,
        label: usize,
        value: f64,
    },
    #[error(
        "truth is hierarchy-inconsistent: sample {sample} positive for label {child} \
         but negative for its parent {parent}"
    )]
    TruthInconsistency {
        sample: usize,
        child: usize,
        parent: usize,
    },
    #[error("ordering length {got} does not match instance count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("ordering is not a permutation: instance {0} appears more than once or is out of range")]
    NotAPermutation(usize),
    #[error("enumeration cap exceeded after {count} orderings")]
    CapExceeded { count: u64 },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("operation requires a forest hierarchy but label {label} has {parents} parents")]
    NotAForest { label: usize, parents: usize },
    #[error("score column for label {label} is degenerate: {positives} positives, {negatives} negatives")]
    DegenerateClass {
        label: usize,
        positives: usize,
        negatives: usize,
    },
    #[error("bandwidth must be positive and finite, got {0}")]
    Bandwidth(f64),
    #[error("mixture density is zero at score {0}")]
    ZeroDensity(f64),
    #[error("no fitted curve for label {0}")]
    UnfittedLabel(usize),
    #[error("cannot build a PR curve with zero positives")]
    ZeroPositives,
    #[error("budget {budget} is outside [1, {n}]")]
    Budget { budget: usize, n: usize },
    #[error("DAG split count {count} exceeds cap {cap}")]
    SplitCapExceeded { count: u128, cap: u128 },
    #[error("no prefix of the training ranking attains precision {target}")]
    UnattainableTarget { target: f64 },
    #[error("failed to satisfy the minimum-positives constraint after {attempts} attempts")]
    RetryExhausted { attempts: usize },
    #[error("invalid simulation setting: {0}")]
    BadSetting(String),
    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{context}: {detail}")]
    Format { context: String, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

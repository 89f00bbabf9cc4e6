//! Scoring prediction sets, aggregating runs and testing significance.

mod aggregate;
pub(crate) mod metrics;
mod report;
mod wilcoxon;

use thiserror::Error;

use crate::inference::{Condition, InferenceError};

pub use aggregate::{aggregate_runs, RunAggregate};
pub use metrics::{score, ClassScores, ConfusionMatrix, EvalReport};
pub use report::{render_table, write_eval_tsv, write_significance_tsv, TableCell};
pub use wilcoxon::{bonferroni, wilcoxon_signed_rank, PMethod, SignificanceResult, EXACT_MAX_N};

/// Significance level used when none is configured.
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error(transparent)]
    Coverage(#[from] InferenceError),
    #[error("cannot aggregate zero reports")]
    NoReports,
    #[error("cannot aggregate reports of {0} and {1}")]
    MixedConditions(Condition, Condition),
    #[error("run {0} appears twice for {1}")]
    DuplicateRun(u64, Condition),
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("paired samples are empty")]
    EmptySample,
    #[error("family size {m} is smaller than the {results} results being corrected")]
    FamilyTooSmall { m: usize, results: usize },
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
}

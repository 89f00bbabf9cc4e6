use serde::{Deserialize, Serialize};

use super::{EvalReport, EvaluationError};
use crate::inference::Condition;

/// Macro-F1 across the runs of one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub condition: Condition,
    pub mean_macro_f1: f64,
    /// Sample standard deviation; 0 when there is a single run.
    pub stddev: f64,
    /// False for a single run, where the sample deviation is undefined.
    pub stddev_defined: bool,
    /// Sorted by run id.
    pub run_ids: Vec<u64>,
    pub per_run_scores: Vec<f64>,
}

impl RunAggregate {
    pub fn n_runs(&self) -> usize {
        self.per_run_scores.len()
    }

    pub fn score_for(&self, run_id: u64) -> Option<f64> {
        self.run_ids
            .iter()
            .position(|r| *r == run_id)
            .map(|k| self.per_run_scores[k])
    }
}

pub fn aggregate_runs(reports: &[EvalReport]) -> Result<RunAggregate, EvaluationError> {
    let first = reports.first().ok_or(EvaluationError::NoReports)?;
    let mut runs: Vec<(u64, f64)> = Vec::with_capacity(reports.len());
    for r in reports {
        if r.condition != first.condition {
            return Err(EvaluationError::MixedConditions(
                first.condition.clone(),
                r.condition.clone(),
            ));
        }
        runs.push((r.run_id, r.macro_f1));
    }
    runs.sort_by_key(|(id, _)| *id);
    if let Some(w) = runs.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(EvaluationError::DuplicateRun(w[0].0, first.condition.clone()));
    }
    let n = runs.len() as f64;
    let mean = runs.iter().map(|r| r.1).sum::<f64>() / n;
    let stddev = if runs.len() > 1 {
        (runs.iter().map(|r| (r.1 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(RunAggregate {
        condition: first.condition.clone(),
        mean_macro_f1: mean,
        stddev,
        stddev_defined: runs.len() > 1,
        run_ids: runs.iter().map(|r| r.0).collect(),
        per_run_scores: runs.iter().map(|r| r.1).collect(),
    })
}

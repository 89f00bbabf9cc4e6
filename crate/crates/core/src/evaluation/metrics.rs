use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::context::VariantDataset;
use crate::inference::{Condition, PredictionSet};

/// Gold rows by predicted columns over the gold label inventory. The last
/// column collects predictions outside it, including UNPARSED.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let k = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; k + 1]; k],
        }
    }

    fn index(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    /// `gold` must be one of the labels.
    pub fn add(&mut self, gold: &str, predicted: &str) {
        let row = self.index(gold).expect("gold label in inventory");
        let col = self.index(predicted).unwrap_or(self.labels.len());
        self.counts[row][col] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn other_column(&self) -> usize {
        self.counts.iter().map(|r| r[self.labels.len()]).sum()
    }

    fn class_scores(&self, i: usize) -> ClassScores {
        let tp = self.counts[i][i];
        let support: usize = self.counts[i].iter().sum();
        let predicted: usize = self.counts.iter().map(|r| r[i]).sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassScores {
            precision,
            recall,
            f1,
            support,
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub condition: Condition,
    pub run_id: u64,
    pub n: usize,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub per_class: BTreeMap<String, ClassScores>,
    /// Predictions outside the gold inventory (UNPARSED or unknown labels).
    pub unscorable: usize,
    pub confusion: ConfusionMatrix,
}

/// Scores `predictions` against the gold labels of `dataset`.
///
/// Classes are the distinct gold labels of the dataset; a class never
/// predicted still contributes its (zero) F1 to the macro average.
pub fn score(
    dataset: &VariantDataset,
    predictions: &PredictionSet,
) -> Result<EvalReport, EvaluationError> {
    predictions.check_coverage(dataset)?;
    let mut cm = ConfusionMatrix::new(dataset.gold_labels());
    for inst in &dataset.instances {
        let predicted = predictions
            .get(&inst.instance_id)
            .expect("coverage checked");
        cm.add(&inst.gold_label, predicted);
    }
    let per_class: BTreeMap<String, ClassScores> = cm
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), cm.class_scores(i)))
        .collect();
    let macro_f1 = if per_class.is_empty() {
        0.0
    } else {
        per_class.values().map(|c| c.f1).sum::<f64>() / per_class.len() as f64
    };
    Ok(EvalReport {
        condition: predictions.condition.clone(),
        run_id: predictions.run_id,
        n: cm.total(),
        macro_f1,
        accuracy: ratio(cm.trace(), cm.total()),
        per_class,
        unscorable: cm.other_column(),
        confusion: cm,
    })
}

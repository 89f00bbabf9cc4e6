use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Condition, InferenceError, PredictionSet};
use crate::context::{RenderedInstance, VariantDataset};
use crate::text::first_token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    /// Most frequent training label everywhere.
    Majority,
    /// Most frequent label per (context first word, second-argument first
    /// word), backing off to the second-argument word alone, then majority.
    Cue,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Majority => "majority",
            BaselineKind::Cue => "cue",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "majority" => Ok(BaselineKind::Majority),
            "cue" => Ok(BaselineKind::Cue),
            other => Err(format!("unknown baseline {other:?}")),
        }
    }
}

type Counts = BTreeMap<String, usize>;

/// Highest count, ties to the lexicographically smallest label.
fn argmax(counts: &Counts) -> Option<String> {
    counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(l, _)| l.clone())
}

fn cue_keys(inst: &RenderedInstance) -> (Option<String>, Option<String>) {
    let context = if inst.context_text.is_empty() {
        None
    } else {
        first_token(&inst.context_text)
    };
    (context, first_token(&inst.arg2_text))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineModel {
    pub kind: BaselineKind,
    pub majority: String,
    joint: BTreeMap<(Option<String>, Option<String>), String>,
    arg2: BTreeMap<Option<String>, String>,
}

impl BaselineModel {
    pub fn predict(&self, inst: &RenderedInstance) -> &str {
        if self.kind == BaselineKind::Majority {
            return &self.majority;
        }
        let key = cue_keys(inst);
        self.joint
            .get(&key)
            .or_else(|| self.arg2.get(&key.1))
            .unwrap_or(&self.majority)
    }
}

pub fn train_baseline(
    train: &VariantDataset,
    kind: BaselineKind,
) -> Result<BaselineModel, InferenceError> {
    let mut overall = Counts::new();
    let mut joint: BTreeMap<_, Counts> = BTreeMap::new();
    let mut arg2: BTreeMap<_, Counts> = BTreeMap::new();
    for inst in &train.instances {
        *overall.entry(inst.gold_label.clone()).or_default() += 1;
        if kind == BaselineKind::Cue {
            let key = cue_keys(inst);
            *arg2
                .entry(key.1.clone())
                .or_default()
                .entry(inst.gold_label.clone())
                .or_default() += 1;
            *joint
                .entry(key)
                .or_default()
                .entry(inst.gold_label.clone())
                .or_default() += 1;
        }
    }
    let majority = argmax(&overall).ok_or(InferenceError::EmptyTraining)?;
    Ok(BaselineModel {
        kind,
        majority,
        joint: collapse(joint),
        arg2: collapse(arg2),
    })
}

fn collapse<K: Ord>(m: BTreeMap<K, Counts>) -> BTreeMap<K, String> {
    m.into_iter()
        .filter_map(|(k, c)| argmax(&c).map(|l| (k, l)))
        .collect()
}

/// Predicts every instance of `dataset`. The condition pairs the dataset's
/// scheme with `model_tag`.
pub fn predict_baseline(
    model: &BaselineModel,
    dataset: &VariantDataset,
    model_tag: &str,
    run_id: u64,
) -> PredictionSet {
    let labels = crate::par::map(&dataset.instances, |i| model.predict(i).to_string());
    let records = dataset
        .instances
        .iter()
        .map(|i| i.instance_id.clone())
        .zip(labels)
        .collect();
    PredictionSet::new(Condition::new(dataset.scheme, model_tag), run_id, records)
}

/// A seeded subsample of `fraction` of the training instances, used to give
/// baseline runs seed-dependent training data. `fraction >= 1` returns a
/// copy.
pub fn subsample(train: &VariantDataset, fraction: f64, seed: u64) -> VariantDataset {
    let n = train.instances.len();
    let keep = ((n as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
    if keep >= n {
        return train.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, keep).into_vec();
    idx.sort_unstable();
    VariantDataset {
        instances: idx.into_iter().map(|k| train.instances[k].clone()).collect(),
        ..train.clone()
    }
}

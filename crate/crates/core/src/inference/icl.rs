use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::InferenceError;
use crate::context::VariantDataset;
use crate::treebank::InstanceId;

/// A labelled demonstration shown before the target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IclExample {
    /// First passage, with the dataset's context prepended.
    pub arg1: String,
    pub arg2: String,
    pub connective: String,
    pub label: String,
}

/// Draws one training instance per label of `train.label_inventory`, in
/// inventory order, never picking an id in `exclude`.
pub fn sample_icl_examples(
    train: &VariantDataset,
    seed: u64,
    exclude: &HashSet<InstanceId>,
) -> Result<Vec<IclExample>, InferenceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    train
        .label_inventory
        .iter()
        .map(|label| {
            let pool: Vec<_> = train
                .instances
                .iter()
                .filter(|i| i.gold_label == *label && !exclude.contains(&i.instance_id))
                .collect();
            let pick = pool
                .choose(&mut rng)
                .ok_or_else(|| InferenceError::MissingTrainingLabel(label.clone()))?;
            Ok(IclExample {
                arg1: pick.model_input(),
                arg2: pick.arg2_text.clone(),
                connective: pick.connective.clone(),
                label: label.clone(),
            })
        })
        .collect()
}

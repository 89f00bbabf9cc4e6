use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::InferenceError;
use crate::context::{ContextScheme, VariantDataset};
use crate::treebank::InstanceId;

/// Prediction recorded when model output names no known label. Scored as
/// wrong for every class.
pub const UNPARSED: &str = "UNPARSED";

/// A context scheme paired with a model tag, e.g. `OR1:cue`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Condition {
    pub scheme: ContextScheme,
    pub model: String,
}

impl Condition {
    pub fn new(scheme: ContextScheme, model: impl Into<String>) -> Self {
        Condition {
            scheme,
            model: model.into(),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.scheme, self.model)
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (scheme, model) = s
            .split_once(':')
            .ok_or_else(|| format!("condition {s:?} is not <scheme>:<model>"))?;
        let scheme = scheme.parse().map_err(|e| format!("{e}"))?;
        Ok(Condition::new(scheme, model))
    }
}

impl Serialize for Condition {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Condition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One model run's outputs over a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionSet {
    pub condition: Condition,
    pub run_id: u64,
    pub records: BTreeMap<InstanceId, String>,
    pub unparsed_count: usize,
}

/// Line format of prediction files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub instance_id: InstanceId,
    pub predicted_label: String,
    pub condition: Condition,
    pub run_id: u64,
}

impl PredictionSet {
    pub fn new(condition: Condition, run_id: u64, records: BTreeMap<InstanceId, String>) -> Self {
        let unparsed_count = records.values().filter(|l| *l == UNPARSED).count();
        PredictionSet {
            condition,
            run_id,
            records,
            unparsed_count,
        }
    }

    pub fn get(&self, id: &InstanceId) -> Option<&str> {
        self.records.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Fails unless the record ids equal the dataset ids exactly.
    pub fn check_coverage(&self, dataset: &VariantDataset) -> Result<(), InferenceError> {
        let unknown: Vec<InstanceId> = self
            .records
            .keys()
            .filter(|id| dataset.get(id).is_none())
            .cloned()
            .collect();
        if !unknown.is_empty() {
            return Err(InferenceError::UnknownInstances(unknown));
        }
        let missing: Vec<InstanceId> = dataset
            .ids()
            .filter(|id| !self.records.contains_key(id))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(InferenceError::MissingInstances(missing));
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (id, label) in &self.records {
            let rec = PredictionRecord {
                instance_id: id.clone(),
                predicted_label: label.clone(),
                condition: self.condition.clone(),
                run_id: self.run_id,
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}

/// Reads a prediction file and checks it against `dataset`.
///
/// Every dataset instance must be present exactly once. Labels outside the
/// dataset's inventory are kept (they score as wrong) and logged.
pub fn read_predictions<R: BufRead>(
    reader: R,
    dataset: &VariantDataset,
) -> Result<PredictionSet, InferenceError> {
    let mut records = BTreeMap::new();
    let mut header: Option<(Condition, u64)> = None;
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| InferenceError::Parse {
                line: k + 1,
                message: e.to_string(),
            })?;
        match &header {
            None => header = Some((rec.condition.clone(), rec.run_id)),
            Some((c, r)) if *c != rec.condition || *r != rec.run_id => {
                return Err(InferenceError::Inconsistent(format!(
                    "{c} run {r} and {} run {}",
                    rec.condition, rec.run_id
                )))
            }
            Some(_) => {}
        }
        if records
            .insert(rec.instance_id.clone(), rec.predicted_label)
            .is_some()
        {
            return Err(InferenceError::DuplicateInstance(rec.instance_id));
        }
    }
    let (condition, run_id) = header.ok_or(InferenceError::EmptyFile)?;
    let set = PredictionSet::new(condition, run_id, records);
    set.check_coverage(dataset)?;
    let known: BTreeSet<&str> = dataset
        .label_inventory
        .iter()
        .map(String::as_str)
        .chain(dataset.instances.iter().map(|i| i.gold_label.as_str()))
        .collect();
    let unknown: BTreeSet<&str> = set
        .records
        .values()
        .map(String::as_str)
        .filter(|l| *l != UNPARSED && !known.contains(l))
        .collect();
    if !unknown.is_empty() {
        log::warn!(
            "{} run {}: predictions use unknown labels {:?}; they score as wrong",
            set.condition,
            set.run_id,
            unknown
        );
    }
    Ok(set)
}

pub fn import_predictions(
    path: &Path,
    dataset: &VariantDataset,
) -> Result<PredictionSet, InferenceError> {
    let file = std::fs::File::open(path)?;
    read_predictions(BufReader::new(file), dataset)
}

//! Context selection and dataset rendering.
//!
//! Context is always text that precedes the first argument and is prepended
//! to it. Three schemes are supported: no context, the `n` sentences before
//! the first argument's sentence, and the first argument's `n` nearest
//! ancestors in the gold dependency tree.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::treebank::{
    ancestors, extract_instances, DiscourseTree, Edu, InstanceId, RelationInstance, Split,
    Treebank, TreebankError, DEFAULT_CONNECTIVE,
};

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("instance {instance_id} does not belong to tree {doc_id}: {reason}")]
    Mismatch {
        instance_id: InstanceId,
        doc_id: String,
        reason: String,
    },
    #[error("corpus {corpus} has no {split} split")]
    MissingSplit { corpus: String, split: Split },
    #[error("invalid context scheme {0:?}")]
    InvalidScheme(String),
    #[error(transparent)]
    Treebank(#[from] TreebankError),
    #[error("dataset line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dataset mixes {0}")]
    Inconsistent(String),
    #[error("duplicate instance {0}")]
    DuplicateInstance(InstanceId),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which preceding text is prepended to the first argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ContextScheme {
    /// No context.
    Default,
    /// The `n` sentences before the first argument's sentence.
    Add(usize),
    /// The first argument's `n` nearest ancestors, read root-to-argument.
    Oracle(usize),
}

impl ContextScheme {
    pub fn add(n: usize) -> Result<Self, ContextError> {
        if n == 0 {
            return Err(ContextError::InvalidScheme("AD0".into()));
        }
        Ok(ContextScheme::Add(n))
    }

    pub fn oracle(n: usize) -> Result<Self, ContextError> {
        if n == 0 {
            return Err(ContextError::InvalidScheme("OR0".into()));
        }
        Ok(ContextScheme::Oracle(n))
    }

    pub fn n(self) -> Option<usize> {
        match self {
            ContextScheme::Default => None,
            ContextScheme::Add(n) | ContextScheme::Oracle(n) => Some(n),
        }
    }

    pub fn is_default(self) -> bool {
        self == ContextScheme::Default
    }
}

impl fmt::Display for ContextScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContextScheme::Default => f.write_str("default"),
            ContextScheme::Add(n) => write!(f, "AD{n}"),
            ContextScheme::Oracle(n) => write!(f, "OR{n}"),
        }
    }
}

impl FromStr for ContextScheme {
    type Err = ContextError;

    /// Accepts `default`, `AD<n>`/`add-<n>` and `OR<n>`/`oracle-<n>`
    /// (case-insensitive); a missing `n` means 1.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        if matches!(lower.as_str(), "default" | "none" | "null") {
            return Ok(ContextScheme::Default);
        }
        let split_n = |rest: &str| -> Result<usize, ContextError> {
            let rest = rest.trim_start_matches(['-', '_']);
            if rest.is_empty() {
                return Ok(1);
            }
            rest.parse()
                .map_err(|_| ContextError::InvalidScheme(s.to_string()))
        };
        for prefix in ["oracle", "or"] {
            if let Some(rest) = lower.strip_prefix(prefix) {
                return ContextScheme::oracle(split_n(rest)?);
            }
        }
        for prefix in ["add", "ad"] {
            if let Some(rest) = lower.strip_prefix(prefix) {
                return ContextScheme::add(split_n(rest)?);
            }
        }
        Err(ContextError::InvalidScheme(s.to_string()))
    }
}

impl Serialize for ContextScheme {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ContextScheme {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ContextOptions {
    /// Prefix each oracle fragment with `(rel:<label>)` of its own edge.
    pub include_relations: bool,
}

fn check_membership<'t>(
    tree: &'t DiscourseTree,
    instance: &RelationInstance,
) -> Result<(&'t Edu, &'t Edu), ContextError> {
    let mismatch = |reason: String| ContextError::Mismatch {
        instance_id: instance.instance_id.clone(),
        doc_id: tree.doc_id.clone(),
        reason,
    };
    if instance.doc_id != tree.doc_id {
        return Err(mismatch(format!("instance comes from {}", instance.doc_id)));
    }
    let arg1 = tree
        .edu(instance.arg1_edu_id)
        .ok_or_else(|| mismatch(format!("no EDU {}", instance.arg1_edu_id)))?;
    let arg2 = tree
        .edu(instance.arg2_edu_id)
        .ok_or_else(|| mismatch(format!("no EDU {}", instance.arg2_edu_id)))?;
    if arg2.head != Some(arg1.id) {
        return Err(mismatch(format!(
            "EDU {} is not headed by EDU {}",
            arg2.id, arg1.id
        )));
    }
    Ok((arg1, arg2))
}

/// Context fragments for `instance` under `scheme`, in reading order.
pub fn select_context(
    tree: &DiscourseTree,
    instance: &RelationInstance,
    scheme: ContextScheme,
    options: ContextOptions,
) -> Result<Vec<String>, ContextError> {
    let (arg1, arg2) = check_membership(tree, instance)?;
    match scheme {
        ContextScheme::Default => Ok(Vec::new()),
        ContextScheme::Add(n) => {
            let last = arg1.sentence_index;
            let first = last.saturating_sub(n);
            Ok((first..last)
                .map(|s| {
                    tree.real_edus()
                        .filter(|e| e.sentence_index == s && e.id != arg2.id)
                        .map(Edu::display_text)
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .filter(|s| !s.is_empty())
                .collect())
        }
        ContextScheme::Oracle(n) => {
            let mut chain = ancestors(tree, arg1.id, n)?;
            chain.reverse();
            Ok(chain
                .into_iter()
                .map(|id| {
                    let edu = tree.edu(id).expect("ancestor exists");
                    if options.include_relations {
                        format!("(rel:{}) {}", edu.relation, edu.display_text())
                    } else {
                        edu.display_text().to_string()
                    }
                })
                .collect())
        }
    }
}

/// One instance as fed to a classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedInstance {
    pub instance_id: InstanceId,
    #[serde(rename = "context")]
    pub context_text: String,
    #[serde(rename = "arg1")]
    pub arg1_text: String,
    #[serde(rename = "arg2")]
    pub arg2_text: String,
    #[serde(rename = "label")]
    pub gold_label: String,
    pub scheme: ContextScheme,
    pub split: Split,
    #[serde(default = "default_connective", skip_serializing_if = "is_default_connective")]
    pub connective: String,
}

fn default_connective() -> String {
    DEFAULT_CONNECTIVE.to_string()
}

fn is_default_connective(c: &String) -> bool {
    c == DEFAULT_CONNECTIVE
}

impl RenderedInstance {
    /// Context followed by the first argument, separated by one space.
    pub fn model_input(&self) -> String {
        if self.context_text.is_empty() {
            self.arg1_text.clone()
        } else {
            format!("{} {}", self.context_text, self.arg1_text)
        }
    }
}

/// Joins `fragments` with single spaces in front of the first argument.
pub fn render_instance(
    instance: &RelationInstance,
    fragments: &[String],
    scheme: ContextScheme,
    split: Split,
) -> RenderedInstance {
    RenderedInstance {
        instance_id: instance.instance_id.clone(),
        context_text: fragments.join(" "),
        arg1_text: instance.arg1.clone(),
        arg2_text: instance.arg2.clone(),
        gold_label: instance.gold_label.clone(),
        scheme,
        split,
        connective: instance.connective.clone(),
    }
}

/// Every instance of one split rendered under one scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantDataset {
    pub corpus_name: String,
    pub scheme: ContextScheme,
    pub split: Split,
    /// Sorted by instance id.
    pub instances: Vec<RenderedInstance>,
    /// Sorted distinct gold labels of the training split.
    pub label_inventory: Vec<String>,
}

/// Renders `split` of `treebank` under `scheme`.
pub fn build_variant_dataset(
    treebank: &Treebank,
    scheme: ContextScheme,
    split: Split,
    options: ContextOptions,
) -> Result<VariantDataset, ContextError> {
    let corpus = treebank
        .split(split)
        .ok_or_else(|| ContextError::MissingSplit {
            corpus: treebank.name.clone(),
            split,
        })?;
    let per_doc = crate::par::try_map(&corpus.trees, |tree| {
        extract_instances(tree)
            .iter()
            .map(|inst| {
                let fragments = select_context(tree, inst, scheme, options)?;
                Ok(render_instance(inst, &fragments, scheme, split))
            })
            .collect::<Result<Vec<_>, ContextError>>()
    })?;
    let mut instances: Vec<RenderedInstance> = per_doc.into_iter().flatten().collect();
    instances.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    Ok(VariantDataset {
        corpus_name: treebank.name.clone(),
        scheme,
        split,
        instances,
        label_inventory: treebank.label_inventory(),
    })
}

impl VariantDataset {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, id: &InstanceId) -> Option<&RenderedInstance> {
        self.instances
            .binary_search_by(|i| i.instance_id.cmp(id))
            .ok()
            .map(|k| &self.instances[k])
    }

    pub fn ids(&self) -> impl Iterator<Item = &InstanceId> {
        self.instances.iter().map(|i| &i.instance_id)
    }

    /// Sorted distinct gold labels present in this dataset.
    pub fn gold_labels(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.instances.iter().map(|i| i.gold_label.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Writes one JSON record per line, in instance id order.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for inst in &self.instances {
            serde_json::to_writer(&mut w, inst)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    /// Reads a dataset file. The label inventory becomes the file's own
    /// sorted distinct labels; callers that evaluate a non-training split
    /// usually replace it with the training inventory.
    pub fn read_jsonl<R: BufRead>(reader: R, corpus_name: &str) -> Result<Self, ContextError> {
        let mut instances: Vec<RenderedInstance> = Vec::new();
        for (k, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: RenderedInstance =
                serde_json::from_str(&line).map_err(|e| ContextError::Parse {
                    line: k + 1,
                    message: e.to_string(),
                })?;
            if let Some(first) = instances.first() {
                if first.scheme != rec.scheme {
                    return Err(ContextError::Inconsistent(format!(
                        "schemes {} and {}",
                        first.scheme, rec.scheme
                    )));
                }
                if first.split != rec.split {
                    return Err(ContextError::Inconsistent(format!(
                        "splits {} and {}",
                        first.split, rec.split
                    )));
                }
            }
            instances.push(rec);
        }
        instances.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
        if let Some(w) = instances.windows(2).find(|w| w[0].instance_id == w[1].instance_id) {
            return Err(ContextError::DuplicateInstance(w[0].instance_id.clone()));
        }
        let (scheme, split) = instances
            .first()
            .map_or((ContextScheme::Default, Split::Test), |i| (i.scheme, i.split));
        let mut ds = VariantDataset {
            corpus_name: corpus_name.to_string(),
            scheme,
            split,
            instances,
            label_inventory: Vec::new(),
        };
        ds.label_inventory = ds.gold_labels();
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use crate::treebank::{derive_sentence_indices, tests::chain3, Corpus};
    use std::collections::BTreeMap;

    fn inst(tree: &DiscourseTree, dep: usize) -> RelationInstance {
        extract_instances(tree)
            .into_iter()
            .find(|i| i.arg2_edu_id == dep)
            .unwrap()
    }

    #[test]
    fn scheme_names_round_trip() {
        for (s, want) in [
            ("default", ContextScheme::Default),
            ("AD1", ContextScheme::Add(1)),
            ("add-3", ContextScheme::Add(3)),
            ("or2", ContextScheme::Oracle(2)),
            ("Oracle", ContextScheme::Oracle(1)),
        ] {
            let got: ContextScheme = s.parse().unwrap();
            assert_eq!(got, want);
            assert_eq!(got.to_string().parse::<ContextScheme>().unwrap(), want);
        }
        assert!("OR0".parse::<ContextScheme>().is_err());
        assert!("window".parse::<ContextScheme>().is_err());
        assert_eq!(ContextScheme::Default.n(), None);
    }

    #[test]
    fn fig2_oracle_context() {
        let tree = synth::simrank_example();
        let i = inst(&tree, 4);
        assert_eq!(i.gold_label, "condition");
        let frags = select_context(&tree, &i, ContextScheme::Oracle(1), Default::default()).unwrap();
        assert_eq!(frags, vec!["that is efficient".to_string()]);
        let r = render_instance(&i, &frags, ContextScheme::Oracle(1), Split::Test);
        assert_eq!(
            r.model_input(),
            "that is efficient because it can compute a single node similarity"
        );
        let with_rel = select_context(
            &tree,
            &i,
            ContextScheme::Oracle(1),
            ContextOptions { include_relations: true },
        )
        .unwrap();
        assert_eq!(with_rel, vec!["(rel:elaboration) that is efficient".to_string()]);
    }

    #[test]
    fn root_attached_arg1_has_no_oracle_context() {
        let tree = chain3();
        let i = inst(&tree, 2);
        assert!(select_context(&tree, &i, ContextScheme::Oracle(1), Default::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn oracle_stops_at_root() {
        let tree = chain3();
        let i = inst(&tree, 3);
        let f = select_context(&tree, &i, ContextScheme::Oracle(2), Default::default()).unwrap();
        assert_eq!(f, vec!["e one".to_string()]);
    }

    #[test]
    fn oracle_orders_furthest_first() {
        let tree = DiscourseTree::new(
            "d",
            vec![
                Edu::root(),
                Edu::new(1, 0, "ROOT", "a"),
                Edu::new(2, 1, "x", "b"),
                Edu::new(3, 2, "x", "c"),
                Edu::new(4, 3, "x", "d"),
            ],
        );
        let i = inst(&tree, 4);
        let f = select_context(&tree, &i, ContextScheme::Oracle(3), Default::default()).unwrap();
        assert_eq!(f, vec!["a", "b"]);
    }

    #[test]
    fn add_uses_preceding_sentences() {
        let tree = derive_sentence_indices(DiscourseTree::new(
            "d",
            vec![
                Edu::root(),
                Edu::new(1, 0, "ROOT", "First ."),
                Edu::new(2, 1, "x", "Second part"),
                Edu::new(3, 2, "x", "continues ."),
                Edu::new(4, 3, "x", "Third ."),
            ],
        ));
        let first = inst(&tree, 2);
        assert!(select_context(&tree, &first, ContextScheme::Add(1), Default::default())
            .unwrap()
            .is_empty());
        let i = inst(&tree, 4);
        let one = select_context(&tree, &i, ContextScheme::Add(1), Default::default()).unwrap();
        assert_eq!(one, vec!["First ."]);
        let two = select_context(&tree, &inst(&tree, 4), ContextScheme::Add(2), Default::default()).unwrap();
        assert_eq!(two, vec!["First ."]);
        let arg1_in_sentence_2 = RelationInstance {
            arg1_edu_id: 4,
            ..i.clone()
        };
        assert!(select_context(&tree, &arg1_in_sentence_2, ContextScheme::Add(1), Default::default()).is_err());
    }

    #[test]
    fn add_never_leaks_arg2() {
        // arg2 (EDU 1) precedes its head (EDU 2) in the previous sentence.
        let tree = derive_sentence_indices(DiscourseTree::new(
            "d",
            vec![
                Edu::root(),
                Edu::new(1, 2, "bg", "Although it rains ."),
                Edu::new(2, 0, "ROOT", "We go ."),
            ],
        ));
        let i = inst(&tree, 1);
        let f = select_context(&tree, &i, ContextScheme::Add(1), Default::default()).unwrap();
        assert!(f.is_empty());
    }

    #[test]
    fn mismatched_instance_is_rejected() {
        let tree = chain3();
        let mut i = inst(&tree, 3);
        i.doc_id = "other".into();
        assert!(matches!(
            select_context(&tree, &i, ContextScheme::Default, Default::default()),
            Err(ContextError::Mismatch { .. })
        ));
    }

    #[test]
    fn render_joins_with_single_space() {
        let tree = chain3();
        let i = inst(&tree, 3);
        let r = render_instance(&i, &[], ContextScheme::Default, Split::Train);
        assert_eq!(r.context_text, "");
        assert_eq!(r.model_input(), i.arg1);
        let frags = vec!["A".to_string(), "B".to_string()];
        let r = render_instance(&RelationInstance { arg1: "C".into(), ..i }, &frags, ContextScheme::Oracle(2), Split::Train);
        assert_eq!(r.model_input(), "A B C");
    }

    fn one_sentence_treebank() -> Treebank {
        let trees: Vec<DiscourseTree> = (0..4)
            .map(|d| {
                derive_sentence_indices(DiscourseTree::new(
                    format!("doc{d}"),
                    vec![
                        Edu::root(),
                        Edu::new(1, 0, "ROOT", "we study parsing"),
                        Edu::new(2, 1, "elab", "that is fast"),
                        Edu::new(3, 1, "enable", "to help users ."),
                    ],
                ))
            })
            .collect();
        let mut splits = BTreeMap::new();
        splits.insert(Split::Test, Corpus::new("one", Split::Test, trees).unwrap());
        Treebank { name: "one".into(), splits }
    }

    #[test]
    fn add_on_single_sentence_documents_equals_default() {
        let tb = one_sentence_treebank();
        let d = build_variant_dataset(&tb, ContextScheme::Default, Split::Test, Default::default()).unwrap();
        let a = build_variant_dataset(&tb, ContextScheme::Add(1), Split::Test, Default::default()).unwrap();
        assert_eq!(d.len(), 8);
        assert!(d.instances.iter().all(|i| i.context_text.is_empty()));
        for (x, y) in d.instances.iter().zip(&a.instances) {
            assert_eq!(RenderedInstance { scheme: x.scheme, ..y.clone() }, *x);
        }
        assert_eq!(d.label_inventory, vec!["elab", "enable"]);
        assert!(build_variant_dataset(&tb, ContextScheme::Default, Split::Dev, Default::default()).is_err());
    }

    #[test]
    fn dataset_file_round_trip_is_byte_stable() {
        let tb = one_sentence_treebank();
        let d = build_variant_dataset(&tb, ContextScheme::Oracle(1), Split::Test, Default::default()).unwrap();
        let text = d.to_jsonl();
        assert!(text.lines().next().unwrap().starts_with(r#"{"instance_id":"doc0#2","context":"","arg1":"we study parsing""#));
        let back = VariantDataset::read_jsonl(text.as_bytes(), "one").unwrap();
        assert_eq!(back.instances, d.instances);
        assert_eq!(back.to_jsonl(), text);
        let again = build_variant_dataset(&tb, ContextScheme::Oracle(1), Split::Test, Default::default()).unwrap();
        assert_eq!(again.to_jsonl(), text);
    }

    #[test]
    fn reading_rejects_mixed_schemes_and_duplicates() {
        let a = r#"{"instance_id":"d#2","context":"","arg1":"a","arg2":"b","label":"x","scheme":"default","split":"test"}"#;
        let b = r#"{"instance_id":"d#3","context":"c","arg1":"a","arg2":"b","label":"x","scheme":"OR1","split":"test"}"#;
        assert!(matches!(
            VariantDataset::read_jsonl(format!("{a}\n{b}\n").as_bytes(), "c"),
            Err(ContextError::Inconsistent(_))
        ));
        assert!(matches!(
            VariantDataset::read_jsonl(format!("{a}\n{a}\n").as_bytes(), "c"),
            Err(ContextError::DuplicateInstance(_))
        ));
        assert!(matches!(
            VariantDataset::read_jsonl("{not json}\n".as_bytes(), "c"),
            Err(ContextError::Parse { line: 1, .. })
        ));
    }
}

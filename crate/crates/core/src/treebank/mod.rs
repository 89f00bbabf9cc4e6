//! Dependency discourse treebanks: documents, validation, instance
//! extraction and corpus statistics.
//!
//! Every document carries an explicit virtual ROOT (id 0, no head, label
//! `"null"`). Real EDUs are numbered from 1 in document order. Each real EDU
//! points at its head; the labelled edge is stored on the dependent.

mod corpus;
mod format;
mod sentences;
mod stats;
mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use corpus::{load_treebank, DocumentFailure, LoadReport};
pub use format::{
    parse_tree_document, serialize_tree, CanonicalReader, TabularReader, TreeReader,
};
pub use sentences::{derive_sentence_indices, ends_sentence};
pub use stats::{dependency_distance_stats, DistanceStats, GapStats};
pub use validate::{validate_tree, Violation, ViolationCode};

/// Id of the virtual ROOT node.
pub const ROOT_ID: usize = 0;
/// Relation label carried by the virtual ROOT.
pub const ROOT_LABEL: &str = "null";
/// Sentence-final marker used in SciDTB EDU text.
pub const SENTENCE_MARKER: &str = "<S>";
/// Connective assigned to instances that have none annotated.
pub const DEFAULT_CONNECTIVE: &str = "none";

#[derive(Debug, Error)]
pub enum TreebankError {
    #[error("{doc_id}: malformed document: {message}")]
    Malformed { doc_id: String, message: String },
    #[error("{doc_id}: duplicate id {id}")]
    DuplicateId { doc_id: String, id: usize },
    #[error("{doc_id}: missing ROOT")]
    MissingRoot { doc_id: String },
    #[error("{doc_id}: dangling head {head} at id {id}")]
    DanglingHead { doc_id: String, id: usize, head: usize },
    #[error("{doc_id}: self-loop at id {id}")]
    SelfLoop { doc_id: String, id: usize },
    #[error("{doc_id}: invalid tree ({} violations)", violations.len())]
    Invalid {
        doc_id: String,
        violations: Vec<Violation>,
    },
    #[error("{doc_id}: unknown EDU id {id}")]
    UnknownEdu { doc_id: String, id: usize },
    #[error("duplicate document {doc_id} in {split} split")]
    DuplicateDocument { doc_id: String, split: Split },
    #[error("corpus {0} has no documents")]
    EmptyCorpus(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl TreebankError {
    /// Report lines for this failure, in the validation report format.
    pub fn violations(&self) -> Vec<Violation> {
        use ViolationCode as C;
        let one = |doc_id: &str, code, detail: String| {
            vec![Violation {
                doc_id: doc_id.to_string(),
                code,
                detail,
            }]
        };
        match self {
            Self::Malformed { doc_id, message } => one(doc_id, C::Malformed, message.clone()),
            Self::DuplicateId { doc_id, id } => {
                one(doc_id, C::DuplicateId, format!("duplicate id {id}"))
            }
            Self::MissingRoot { doc_id } => one(doc_id, C::MissingRoot, "missing ROOT".into()),
            Self::DanglingHead { doc_id, id, head } => one(
                doc_id,
                C::DanglingHead,
                format!("dangling head {head} at id {id}"),
            ),
            Self::SelfLoop { doc_id, id } => {
                one(doc_id, C::SelfLoop, format!("self-loop at id {id}"))
            }
            Self::Invalid { violations, .. } => violations.clone(),
            Self::UnknownEdu { doc_id, id } => {
                one(doc_id, C::Malformed, format!("unknown EDU id {id}"))
            }
            Self::DuplicateDocument { doc_id, split } => one(
                doc_id,
                C::DuplicateDocument,
                format!("duplicate document in {split} split"),
            ),
            Self::EmptyCorpus(name) => one(name, C::Malformed, "no documents".into()),
            Self::Io { path, source } => one(path, C::Malformed, source.to_string()),
        }
    }
}

/// One elementary discourse unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edu {
    pub id: usize,
    pub text: String,
    /// `None` only for the virtual ROOT.
    pub head: Option<usize>,
    pub relation: String,
    pub sentence_index: usize,
}

impl Edu {
    pub fn root() -> Self {
        Edu {
            id: ROOT_ID,
            text: "ROOT".to_string(),
            head: None,
            relation: ROOT_LABEL.to_string(),
            sentence_index: 0,
        }
    }

    pub fn new(id: usize, head: usize, relation: &str, text: &str) -> Self {
        Edu {
            id,
            text: text.to_string(),
            head: Some(head),
            relation: relation.to_string(),
            sentence_index: 0,
        }
    }

    pub fn is_root(&self) -> bool {
        self.head.is_none()
    }

    /// Head id in the serialized convention: −1 for ROOT.
    pub fn head_id(&self) -> i64 {
        self.head.map_or(-1, |h| h as i64)
    }

    /// EDU text with a trailing sentence marker removed.
    pub fn display_text(&self) -> &str {
        let t = self.text.trim_end();
        t.strip_suffix(SENTENCE_MARKER).map_or(t, str::trim_end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscourseTree {
    pub doc_id: String,
    /// Document order, ROOT first.
    pub edus: Vec<Edu>,
}

impl DiscourseTree {
    pub fn new(doc_id: impl Into<String>, edus: Vec<Edu>) -> Self {
        DiscourseTree {
            doc_id: doc_id.into(),
            edus,
        }
    }

    pub fn edu(&self, id: usize) -> Option<&Edu> {
        match self.edus.get(id) {
            Some(e) if e.id == id => Some(e),
            _ => self.edus.iter().find(|e| e.id == id),
        }
    }

    /// EDUs other than the virtual ROOT.
    pub fn real_edus(&self) -> impl Iterator<Item = &Edu> {
        self.edus.iter().filter(|e| !e.is_root())
    }

    pub fn instances(&self) -> Vec<RelationInstance> {
        extract_instances(self)
    }

    pub fn ancestors(&self, edu_id: usize, max_n: usize) -> Result<Vec<usize>, TreebankError> {
        ancestors(self, edu_id, max_n)
    }
}

/// Identifies an instance by document and dependent EDU. Orders by document
/// id, then numerically by EDU id; renders as `doc_id#edu_id`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstanceId {
    pub doc_id: String,
    pub edu_id: usize,
}

impl InstanceId {
    pub fn new(doc_id: impl Into<String>, edu_id: usize) -> Self {
        InstanceId {
            doc_id: doc_id.into(),
            edu_id,
        }
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.doc_id, self.edu_id)
    }
}

impl FromStr for InstanceId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (doc, edu) = s
            .rsplit_once('#')
            .ok_or_else(|| format!("instance id {s:?} lacks '#'"))?;
        let edu_id = edu
            .parse()
            .map_err(|_| format!("instance id {s:?} has non-numeric EDU id"))?;
        Ok(InstanceId::new(doc, edu_id))
    }
}

impl Serialize for InstanceId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InstanceId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One classification item: the head EDU is the first argument, the
/// dependent (which carries the label) is the second.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationInstance {
    pub instance_id: InstanceId,
    pub doc_id: String,
    pub arg1: String,
    pub arg2: String,
    pub arg1_edu_id: usize,
    pub arg2_edu_id: usize,
    pub gold_label: String,
    pub connective: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "valid" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// All documents of one split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub name: String,
    pub split: Split,
    pub trees: Vec<DiscourseTree>,
}

impl Corpus {
    pub fn new(
        name: impl Into<String>,
        split: Split,
        mut trees: Vec<DiscourseTree>,
    ) -> Result<Self, TreebankError> {
        trees.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        if let Some(w) = trees.windows(2).find(|w| w[0].doc_id == w[1].doc_id) {
            return Err(TreebankError::DuplicateDocument {
                doc_id: w[0].doc_id.clone(),
                split,
            });
        }
        Ok(Corpus {
            name: name.into(),
            split,
            trees,
        })
    }

    pub fn tree(&self, doc_id: &str) -> Option<&DiscourseTree> {
        self.trees
            .binary_search_by(|t| t.doc_id.as_str().cmp(doc_id))
            .ok()
            .map(|i| &self.trees[i])
    }

    /// Instances of every document, ordered by (doc_id, dependent id).
    pub fn instances(&self) -> Vec<RelationInstance> {
        crate::par::map(&self.trees, extract_instances)
            .into_iter()
            .flatten()
            .collect()
    }

    pub fn edu_count(&self) -> usize {
        self.trees.iter().map(|t| t.real_edus().count()).sum()
    }
}

/// A named treebank with whichever splits were found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Treebank {
    pub name: String,
    pub splits: std::collections::BTreeMap<Split, Corpus>,
}

impl Treebank {
    pub fn split(&self, split: Split) -> Option<&Corpus> {
        self.splits.get(&split)
    }

    /// Sorted distinct gold labels of the training split, falling back to
    /// all available splits when no training split was loaded.
    pub fn label_inventory(&self) -> Vec<String> {
        let sources: Vec<&Corpus> = match self.splits.get(&Split::Train) {
            Some(c) => vec![c],
            None => self.splits.values().collect(),
        };
        let labels: std::collections::BTreeSet<String> = sources
            .iter()
            .flat_map(|c| c.instances())
            .map(|i| i.gold_label)
            .collect();
        labels.into_iter().collect()
    }
}

/// One instance per real EDU whose head is another real EDU, in dependent-id
/// order.
pub fn extract_instances(tree: &DiscourseTree) -> Vec<RelationInstance> {
    let mut deps: Vec<&Edu> = tree.real_edus().collect();
    deps.sort_by_key(|e| e.id);
    deps.into_iter()
        .filter_map(|dep| {
            let head_id = dep.head?;
            if head_id == ROOT_ID {
                return None;
            }
            let head = tree.edu(head_id)?;
            if head.is_root() {
                return None;
            }
            Some(RelationInstance {
                instance_id: InstanceId::new(tree.doc_id.clone(), dep.id),
                doc_id: tree.doc_id.clone(),
                arg1: head.display_text().to_string(),
                arg2: dep.display_text().to_string(),
                arg1_edu_id: head.id,
                arg2_edu_id: dep.id,
                gold_label: dep.relation.clone(),
                connective: DEFAULT_CONNECTIVE.to_string(),
            })
        })
        .collect()
}

/// Up to `max_n` ancestors of `edu_id`, nearest first, never including the
/// virtual ROOT.
pub fn ancestors(
    tree: &DiscourseTree,
    edu_id: usize,
    max_n: usize,
) -> Result<Vec<usize>, TreebankError> {
    let unknown = |id| TreebankError::UnknownEdu {
        doc_id: tree.doc_id.clone(),
        id,
    };
    let mut current = tree.edu(edu_id).ok_or_else(|| unknown(edu_id))?;
    let mut out = Vec::with_capacity(max_n);
    // Bounded walk: a malformed tree cannot loop forever.
    for _ in 0..tree.edus.len() {
        if out.len() >= max_n {
            break;
        }
        let Some(head_id) = current.head else { break };
        let head = tree.edu(head_id).ok_or_else(|| unknown(head_id))?;
        if head.is_root() {
            break;
        }
        out.push(head.id);
        current = head;
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// ROOT ← e1 ← e2 ← e3, all in one sentence.
    pub fn chain3() -> DiscourseTree {
        DiscourseTree::new(
            "chain",
            vec![
                Edu::root(),
                Edu::new(1, 0, "ROOT", "e one"),
                Edu::new(2, 1, "elab-addition", "e two"),
                Edu::new(3, 2, "condition", "e three ."),
            ],
        )
    }

    #[test]
    fn root_only_child_yields_no_instances() {
        let t = DiscourseTree::new("d", vec![Edu::root(), Edu::new(1, 0, "ROOT", "only")]);
        assert!(extract_instances(&t).is_empty());
    }

    #[test]
    fn chain_instances() {
        let inst = extract_instances(&chain3());
        let pairs: Vec<_> = inst.iter().map(|i| (i.arg1_edu_id, i.arg2_edu_id)).collect();
        assert_eq!(pairs, vec![(1, 2), (2, 3)]);
        assert_eq!(inst[1].gold_label, "condition");
        assert_eq!(inst[1].arg1, "e two");
        assert_eq!(inst[1].instance_id.to_string(), "chain#3");
        assert_eq!(inst[0].connective, "none");
    }

    #[test]
    fn ancestors_stop_before_root() {
        let t = chain3();
        assert_eq!(ancestors(&t, 1, 1).unwrap(), Vec::<usize>::new());
        assert_eq!(ancestors(&t, 3, 2).unwrap(), vec![2, 1]);
        assert_eq!(ancestors(&t, 3, 5).unwrap(), vec![2, 1]);
        assert_eq!(ancestors(&t, 3, 1).unwrap(), vec![2]);
        assert!(matches!(
            ancestors(&t, 9, 1),
            Err(TreebankError::UnknownEdu { id: 9, .. })
        ));
    }

    #[test]
    fn instance_id_orders_numerically() {
        let a: InstanceId = "doc#2".parse().unwrap();
        let b: InstanceId = "doc#10".parse().unwrap();
        assert!(a < b);
        assert_eq!(b.to_string(), "doc#10");
        assert!("nohash".parse::<InstanceId>().is_err());
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, "\"doc#2\"");
    }

    #[test]
    fn display_text_drops_sentence_marker() {
        let e = Edu::new(1, 0, "ROOT", "we propose a model . <S>");
        assert_eq!(e.display_text(), "we propose a model .");
        assert_eq!(Edu::new(1, 0, "x", "plain").display_text(), "plain");
    }

    #[test]
    fn corpus_rejects_duplicate_documents() {
        let t = chain3();
        let err = Corpus::new("c", Split::Test, vec![t.clone(), t]).unwrap_err();
        assert!(matches!(err, TreebankError::DuplicateDocument { .. }));
    }

    #[test]
    fn split_parsing() {
        assert_eq!("TEST".parse::<Split>().unwrap(), Split::Test);
        assert_eq!("validation".parse::<Split>().unwrap(), Split::Dev);
        assert!("other".parse::<Split>().is_err());
    }
}

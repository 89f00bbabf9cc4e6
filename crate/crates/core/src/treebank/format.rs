//! Serialized tree formats.
//!
//! The canonical format is the SciDTB layout: a JSON object whose `"root"`
//! key holds EDU records `{id, parent, relation, text}` in ascending id
//! order, ROOT first with parent −1. Other treebanks are normalized through
//! a [`TreeReader`].

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{
    derive_sentence_indices, validate_tree, DiscourseTree, Edu, TreebankError, ROOT_LABEL,
};

#[derive(Debug, Serialize, Deserialize)]
struct RawDocument {
    root: Vec<RawEdu>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawEdu {
    id: i64,
    parent: i64,
    relation: String,
    text: String,
}

/// Normalizes one serialized document into a validated [`DiscourseTree`].
pub trait TreeReader: Send + Sync {
    fn read(&self, bytes: &[u8], doc_id: &str) -> Result<DiscourseTree, TreebankError>;

    /// File extensions (without dot) this reader accepts.
    fn extensions(&self) -> &[&'static str];
}

/// Reads the canonical SciDTB JSON layout (`.dep` / `.json`).
#[derive(Debug, Default, Clone, Copy)]
pub struct CanonicalReader;

impl TreeReader for CanonicalReader {
    fn read(&self, bytes: &[u8], doc_id: &str) -> Result<DiscourseTree, TreebankError> {
        parse_tree_document(bytes, doc_id)
    }

    fn extensions(&self) -> &[&'static str] {
        &["dep", "json"]
    }
}

/// Reads tab-separated EDU tables: one `id<TAB>parent<TAB>relation<TAB>text`
/// line per EDU, `#` comments allowed. The ROOT row may be omitted.
#[derive(Debug, Default, Clone, Copy)]
pub struct TabularReader;

impl TreeReader for TabularReader {
    fn read(&self, bytes: &[u8], doc_id: &str) -> Result<DiscourseTree, TreebankError> {
        let malformed = |message: String| TreebankError::Malformed {
            doc_id: doc_id.to_string(),
            message,
        };
        let text = std::str::from_utf8(strip_bom(bytes))
            .map_err(|e| malformed(format!("invalid UTF-8: {e}")))?;
        let mut raw = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.splitn(4, '\t').collect();
            let [id, parent, relation, text] = cols[..] else {
                return Err(malformed(format!("line {}: expected 4 columns", lineno + 1)));
            };
            let num = |s: &str| {
                s.trim()
                    .parse::<i64>()
                    .map_err(|_| malformed(format!("line {}: bad integer {s:?}", lineno + 1)))
            };
            raw.push(RawEdu {
                id: num(id)?,
                parent: num(parent)?,
                relation: relation.trim().to_string(),
                text: text.to_string(),
            });
        }
        if !raw.iter().any(|e| e.parent == -1) {
            raw.insert(
                0,
                RawEdu {
                    id: 0,
                    parent: -1,
                    relation: ROOT_LABEL.to_string(),
                    text: "ROOT".to_string(),
                },
            );
        }
        build_tree(raw, doc_id)
    }

    fn extensions(&self) -> &[&'static str] {
        &["tsv"]
    }
}

fn strip_bom(bytes: &[u8]) -> &[u8] {
    bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes)
}

/// Parses a canonical tree document and validates it.
///
/// EDU text is trimmed; everything else is kept verbatim. Sentence indices
/// are derived from terminal punctuation.
pub fn parse_tree_document(bytes: &[u8], doc_id: &str) -> Result<DiscourseTree, TreebankError> {
    let raw: RawDocument =
        serde_json::from_slice(strip_bom(bytes)).map_err(|e| TreebankError::Malformed {
            doc_id: doc_id.to_string(),
            message: e.to_string(),
        })?;
    build_tree(raw.root, doc_id)
}

fn build_tree(raw: Vec<RawEdu>, doc_id: &str) -> Result<DiscourseTree, TreebankError> {
    let doc = || doc_id.to_string();
    let mut edus = Vec::with_capacity(raw.len());
    let mut seen = HashSet::new();
    for r in &raw {
        if r.id < 0 {
            return Err(TreebankError::Malformed {
                doc_id: doc(),
                message: format!("negative id {}", r.id),
            });
        }
        if r.parent < -1 {
            return Err(TreebankError::Malformed {
                doc_id: doc(),
                message: format!("invalid parent {} at id {}", r.parent, r.id),
            });
        }
        let id = r.id as usize;
        if !seen.insert(id) {
            return Err(TreebankError::DuplicateId { doc_id: doc(), id });
        }
    }
    if !raw.iter().any(|r| r.parent == -1) {
        return Err(TreebankError::MissingRoot { doc_id: doc() });
    }
    for r in raw {
        let id = r.id as usize;
        let head = (r.parent >= 0).then_some(r.parent as usize);
        if let Some(h) = head {
            if h == id {
                return Err(TreebankError::SelfLoop { doc_id: doc(), id });
            }
            if !seen.contains(&h) {
                return Err(TreebankError::DanglingHead {
                    doc_id: doc(),
                    id,
                    head: h,
                });
            }
        }
        edus.push(Edu {
            id,
            text: r.text.trim().to_string(),
            head,
            relation: r.relation,
            sentence_index: 0,
        });
    }
    let tree = DiscourseTree::new(doc_id, edus);
    let violations = validate_tree(&tree);
    if !violations.is_empty() {
        return Err(TreebankError::Invalid {
            doc_id: doc(),
            violations,
        });
    }
    Ok(derive_sentence_indices(tree))
}

/// Serializes `tree` in the canonical layout.
pub fn serialize_tree(tree: &DiscourseTree) -> String {
    let doc = RawDocument {
        root: tree
            .edus
            .iter()
            .map(|e| RawEdu {
                id: e.id as i64,
                parent: e.head_id(),
                relation: e.relation.clone(),
                text: e.text.clone(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("tree serializes");
    s.push('\n');
    s
}

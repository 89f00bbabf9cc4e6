use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{DiscourseTree, ROOT_ID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    Malformed,
    DuplicateDocument,
    DuplicateId,
    NonContiguousIds,
    MissingRoot,
    MultipleRoots,
    RootNotZero,
    RootAttachment,
    DanglingHead,
    SelfLoop,
    Cycle,
    EmptyText,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Malformed => "malformed",
            Self::DuplicateDocument => "duplicate-document",
            Self::DuplicateId => "duplicate-id",
            Self::NonContiguousIds => "non-contiguous-ids",
            Self::MissingRoot => "missing-root",
            Self::MultipleRoots => "multiple-roots",
            Self::RootNotZero => "root-not-zero",
            Self::RootAttachment => "root-attachment",
            Self::DanglingHead => "dangling-head",
            Self::SelfLoop => "self-loop",
            Self::Cycle => "cycle",
            Self::EmptyText => "empty-text",
        }
    }
}

/// One failed tree invariant. Displays as a validation report line:
/// `doc_id<TAB>code<TAB>detail`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub doc_id: String,
    pub code: ViolationCode,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.doc_id, self.code.as_str(), self.detail)
    }
}

fn join_ids(ids: impl IntoIterator<Item = usize>) -> String {
    ids.into_iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Checks every tree invariant. Returns an empty list iff the tree is legal.
pub fn validate_tree(tree: &DiscourseTree) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code, detail: String| {
        out.push(Violation {
            doc_id: tree.doc_id.clone(),
            code,
            detail,
        })
    };

    // id -> position of first occurrence
    let mut positions: BTreeMap<usize, usize> = BTreeMap::new();
    for (pos, edu) in tree.edus.iter().enumerate() {
        if positions.insert(edu.id, pos).is_some() {
            push(ViolationCode::DuplicateId, format!("duplicate id {}", edu.id));
        }
    }
    let n = positions.len();
    if let Some((&max, _)) = positions.iter().next_back() {
        if max + 1 != n {
            let missing: Vec<usize> = (0..=max).filter(|i| !positions.contains_key(i)).collect();
            push(
                ViolationCode::NonContiguousIds,
                format!("ids not contiguous from 0; missing {}", join_ids(missing)),
            );
        }
    }

    let roots: Vec<usize> = tree.edus.iter().filter(|e| e.is_root()).map(|e| e.id).collect();
    match roots.as_slice() {
        [] => push(ViolationCode::MissingRoot, "missing ROOT".to_string()),
        [r] if *r != ROOT_ID => push(
            ViolationCode::RootNotZero,
            format!("ROOT has id {r}, expected {ROOT_ID}"),
        ),
        [_] => {}
        many => push(
            ViolationCode::MultipleRoots,
            format!("multiple roots (ids {})", join_ids(many.iter().copied())),
        ),
    }

    let mut root_children = Vec::new();
    for edu in tree.real_edus() {
        let head = edu.head.expect("real EDU has a head");
        if edu.text.trim().is_empty() {
            push(ViolationCode::EmptyText, format!("empty text at id {}", edu.id));
        }
        if head == edu.id {
            push(ViolationCode::SelfLoop, format!("self-loop at id {}", edu.id));
        } else if !positions.contains_key(&head) {
            push(
                ViolationCode::DanglingHead,
                format!("dangling head {head} at id {}", edu.id),
            );
        } else if head == ROOT_ID {
            root_children.push(edu.id);
        }
    }
    if !roots.is_empty() && root_children.len() != 1 {
        let detail = if root_children.is_empty() {
            "no EDU attached to ROOT".to_string()
        } else {
            format!("multiple EDUs attached to ROOT (ids {})", join_ids(root_children))
        };
        push(ViolationCode::RootAttachment, detail);
    }

    for cycle in find_cycles(tree, &positions) {
        push(
            ViolationCode::Cycle,
            format!("cycle involving ids {}", join_ids(cycle)),
        );
    }
    out
}

/// Cycles of length ≥ 2 among head links, each as a sorted id set.
fn find_cycles(tree: &DiscourseTree, positions: &BTreeMap<usize, usize>) -> Vec<BTreeSet<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut marks = vec![Mark::New; tree.edus.len()];
    let mut cycles = Vec::new();
    for start in 0..tree.edus.len() {
        if marks[start] != Mark::New {
            continue;
        }
        let mut path: Vec<usize> = Vec::new();
        let mut pos = start;
        loop {
            match marks[pos] {
                Mark::Done => break,
                Mark::Active => {
                    let from = path.iter().position(|&p| p == pos).expect("active on path");
                    let ids: BTreeSet<usize> = path[from..].iter().map(|&p| tree.edus[p].id).collect();
                    if ids.len() > 1 {
                        cycles.push(ids);
                    }
                    break;
                }
                Mark::New => {
                    marks[pos] = Mark::Active;
                    path.push(pos);
                    let edu = &tree.edus[pos];
                    match edu.head.and_then(|h| positions.get(&h)) {
                        Some(&next) if tree.edus[next].id != edu.id => pos = next,
                        _ => break,
                    }
                }
            }
        }
        for p in path {
            marks[p] = Mark::Done;
        }
    }
    cycles
}

//! Synthetic treebanks for tests, benchmarks and demos.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::treebank::{derive_sentence_indices, Corpus, DiscourseTree, Edu, Split, Treebank};

/// The four-EDU excerpt around the SciDTB document P14-1131 example: the
/// `condition` edge between EDUs 3 and 4 sits under an `elaboration` EDU.
pub fn simrank_example() -> DiscourseTree {
    derive_sentence_indices(DiscourseTree::new(
        "P14-1131",
        vec![
            Edu::root(),
            Edu::new(1, 0, "ROOT", "We propose a new algorithm for SimRank computation"),
            Edu::new(2, 1, "elaboration", "that is efficient"),
            Edu::new(3, 2, "exp-reason", "because it can compute a single node similarity"),
            Edu::new(
                4,
                3,
                "condition",
                "without having to compute the similarities of the entire graph .",
            ),
        ],
    ))
}

const LABELS: &[&str] = &[
    "attribution",
    "bg-goal",
    "cause",
    "comparison",
    "condition",
    "contrast",
    "elab-addition",
    "enablement",
    "joint",
    "temporal",
];

const WORDS: &[&str] = &[
    "model", "graph", "parser", "corpus", "method", "results", "data", "task", "feature",
    "system", "we", "show", "propose", "improve", "compute", "learn", "word", "tree",
];

/// A random but valid tree with `n_edus` real EDUs. Heads may lie on either
/// side of their dependents. About a third of the EDUs end a sentence.
pub fn random_tree<R: Rng>(rng: &mut R, doc_id: &str, n_edus: usize) -> DiscourseTree {
    let mut order: Vec<usize> = (1..=n_edus).collect();
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut heads = vec![0usize; n_edus + 1];
    for (k, &id) in order.iter().enumerate() {
        heads[id] = if k == 0 { 0 } else { order[rng.random_range(0..k)] };
    }
    let mut edus = vec![Edu::root()];
    for (id, &head) in heads.iter().enumerate().skip(1) {
        let len = rng.random_range(2..7);
        let mut words: Vec<&str> = (0..len).map(|_| *WORDS.choose(rng).expect("non-empty")).collect();
        if id == n_edus || rng.random_bool(0.35) {
            words.push(".");
        }
        let text = format!("{} x{id}", words.join(" "));
        let text = if text.contains(" .") {
            format!("{} .", text.replace(" .", ""))
        } else {
            text
        };
        let label = if head == 0 {
            "ROOT"
        } else {
            LABELS.choose(rng).expect("non-empty")
        };
        edus.push(Edu::new(id, head, label, &text));
    }
    derive_sentence_indices(DiscourseTree::new(doc_id, edus))
}

/// `n_docs` random trees of 2..=`max_edus` EDUs in the test split, plus a
/// smaller training split.
pub fn random_treebank(seed: u64, n_docs: usize, max_edus: usize) -> Treebank {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make = |prefix: &str, n: usize| -> Vec<DiscourseTree> {
        (0..n)
            .map(|d| {
                let size = rng.random_range(2..=max_edus.max(2));
                random_tree(&mut rng, &format!("{prefix}{d:04}"), size)
            })
            .collect()
    };
    let test = make("doc", n_docs);
    let train = make("train", n_docs.div_ceil(2));
    let mut splits = BTreeMap::new();
    splits.insert(Split::Train, Corpus::new("synthetic", Split::Train, train).expect("unique ids"));
    splits.insert(Split::Test, Corpus::new("synthetic", Split::Test, test).expect("unique ids"));
    Treebank {
        name: "synthetic".to_string(),
        splits,
    }
}

/// Cue words whose appearance as the first token of the structural context
/// decides between `condition` and `contrast`.
pub const DISAMBIGUATION_CUES: [(&str, &str); 2] = [("Efficient", "condition"), ("Unlike", "contrast")];

/// A treebank where the second argument of every `condition`/`contrast`
/// edge begins with "without", so the argument pair alone is ambiguous. The
/// label is fixed by the first word of the first argument's parent, which
/// the oracle context exposes and the preceding sentence does not.
///
/// Each document reads:
///
/// 1. `<Cue> methods are studied for <topic> .` (attached to ROOT)
/// 2. `Data are collected from <source> .` (joint, head 1)
/// 3. `that <verb> the <topic>` (elaboration, head 1)
/// 4. `without <gerund> the <noun> .` (condition or contrast, head 3)
pub fn disambiguation_treebank(seed: u64, train_docs: usize, test_docs: usize) -> Treebank {
    const TOPICS: &[&str] = &["parsing", "tagging", "retrieval", "summarization", "translation"];
    const SOURCES: &[&str] = &["the web", "news", "papers", "forums"];
    const VERBS: &[&str] = &["handles", "scales", "improves", "models"];
    const GERUNDS: &[&str] = &["computing", "storing", "annotating", "ranking"];
    const NOUNS: &[&str] = &["graph", "corpus", "lexicon", "index"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make = |prefix: &str, n: usize| -> Vec<DiscourseTree> {
        (0..n)
            .map(|d| {
                // Mildly unbalanced so the context-free majority is stable.
                let (cue, label) = if rng.random_bool(0.55) {
                    DISAMBIGUATION_CUES[0]
                } else {
                    DISAMBIGUATION_CUES[1]
                };
                let topic = TOPICS.choose(&mut rng).expect("non-empty");
                let edus = vec![
                    Edu::root(),
                    Edu::new(1, 0, "ROOT", &format!("{cue} methods are studied for {topic} .")),
                    Edu::new(
                        2,
                        1,
                        "joint",
                        &format!("Data are collected from {} .", SOURCES.choose(&mut rng).expect("non-empty")),
                    ),
                    Edu::new(
                        3,
                        1,
                        "elaboration",
                        &format!("that {} the {topic}", VERBS.choose(&mut rng).expect("non-empty")),
                    ),
                    Edu::new(
                        4,
                        3,
                        label,
                        &format!(
                            "without {} the {} .",
                            GERUNDS.choose(&mut rng).expect("non-empty"),
                            NOUNS.choose(&mut rng).expect("non-empty")
                        ),
                    ),
                ];
                derive_sentence_indices(DiscourseTree::new(format!("{prefix}{d:04}"), edus))
            })
            .collect()
    };
    let train = make("tr", train_docs);
    let test = make("te", test_docs);
    let mut splits = BTreeMap::new();
    splits.insert(Split::Train, Corpus::new("disambiguation", Split::Train, train).expect("unique ids"));
    splits.insert(Split::Test, Corpus::new("disambiguation", Split::Test, test).expect("unique ids"));
    Treebank {
        name: "disambiguation".to_string(),
        splits,
    }
}

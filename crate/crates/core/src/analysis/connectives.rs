use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, Category, RelationMargins};
use crate::context::VariantDataset;
use crate::text::{first_token, normalized_tokens};

const DEFAULT_LEXICON: &str = include_str!("../../data/connectives.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectiveLexicon {
    pub source: String,
    entries: BTreeSet<String>,
    max_words: usize,
}

impl ConnectiveLexicon {
    /// One connective per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, source: &str) -> Result<Self, AnalysisError> {
        let entries: BTreeSet<String> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .map(|l| normalized_tokens(l).join(" "))
            .filter(|l| !l.is_empty())
            .collect();
        if entries.is_empty() {
            return Err(AnalysisError::EmptyLexicon(source.to_string()));
        }
        let max_words = entries
            .iter()
            .map(|e| e.split(' ').count())
            .max()
            .unwrap_or(1);
        Ok(ConnectiveLexicon {
            source: source.to_string(),
            entries,
            max_words,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, connective: &str) -> bool {
        self.entries.contains(&normalized_tokens(connective).join(" "))
    }

    /// The connective `text` opens with, if any. Without `multiword` only
    /// the first token is looked up; with it the longest matching prefix
    /// wins.
    pub fn match_start(&self, text: &str, multiword: bool) -> Option<String> {
        if !multiword {
            return first_token(text).filter(|t| self.entries.contains(t));
        }
        let tokens = normalized_tokens(text);
        (1..=self.max_words.min(tokens.len()))
            .rev()
            .map(|k| tokens[..k].join(" "))
            .find(|p| self.entries.contains(p))
    }
}

pub fn load_connective_lexicon(path: &Path) -> Result<ConnectiveLexicon, AnalysisError> {
    let text = std::fs::read_to_string(path)?;
    ConnectiveLexicon::parse(&text, &path.display().to_string())
}

/// The lexicon shipped in `data/connectives.txt`.
pub fn default_lexicon() -> ConnectiveLexicon {
    ConnectiveLexicon::parse(DEFAULT_LEXICON, "builtin").expect("builtin lexicon is non-empty")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchLevel {
    /// Share of instances.
    #[default]
    Instance,
    /// Unweighted mean over relations of each relation's instance share.
    Type,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchOptions {
    pub level: MatchLevel,
    pub multiword: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMatch {
    /// Instance counts, at either level.
    pub matched: usize,
    pub total: usize,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConnectiveMatchReport {
    pub categories: BTreeMap<Category, CategoryMatch>,
}

impl ConnectiveMatchReport {
    pub fn write_tsv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "category\tmatched\ttotal\tpercentage")?;
        for (c, m) in &self.categories {
            writeln!(w, "{c}\t{}\t{}\t{:.2}", m.matched, m.total, m.percentage)?;
        }
        Ok(())
    }
}

fn pct(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        100.0 * a as f64 / b as f64
    }
}

/// Per category, how often the second argument of an instance whose gold
/// relation falls in that category opens with a known connective.
/// Instances of uncategorized relations are ignored.
pub fn connective_match_rate(
    instances: &VariantDataset,
    categories: &RelationMargins,
    lexicon: &ConnectiveLexicon,
    options: MatchOptions,
) -> ConnectiveMatchReport {
    let hits = crate::par::map(&instances.instances, |i| {
        lexicon.match_start(&i.arg2_text, options.multiword).is_some()
    });
    // relation -> (matched, total)
    let mut per_relation: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (inst, hit) in instances.instances.iter().zip(hits) {
        let e = per_relation.entry(inst.gold_label.as_str()).or_default();
        e.0 += hit as usize;
        e.1 += 1;
    }
    let mut report = ConnectiveMatchReport::default();
    for category in Category::ALL {
        let rels: Vec<(usize, usize)> = categories
            .get(category)
            .iter()
            .filter_map(|m| per_relation.get(m.relation.as_str()).copied())
            .collect();
        let matched = rels.iter().map(|r| r.0).sum();
        let total = rels.iter().map(|r| r.1).sum();
        let percentage = match options.level {
            MatchLevel::Instance => pct(matched, total),
            MatchLevel::Type if rels.is_empty() => 0.0,
            MatchLevel::Type => {
                rels.iter().map(|r| pct(r.0, r.1)).sum::<f64>() / rels.len() as f64
            }
        };
        report.categories.insert(
            category,
            CategoryMatch {
                matched,
                total,
                percentage,
            },
        );
    }
    report
}

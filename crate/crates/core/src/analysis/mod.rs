//! Paired error analysis between two conditions and connective matching.

mod connectives;
mod margins;

use thiserror::Error;

use crate::inference::InferenceError;

pub use connectives::{
    connective_match_rate, default_lexicon, load_connective_lexicon, CategoryMatch,
    ConnectiveLexicon, ConnectiveMatchReport, MatchLevel, MatchOptions,
};
pub use margins::{
    pair_outcomes, relation_margins, tally_outcomes, write_margins_tsv, Category, DeltaDefinition,
    Outcome, PairedOutcome, RelationMargin, RelationMargins,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("condition {which}: {source}")]
    Coverage {
        which: &'static str,
        #[source]
        source: InferenceError,
    },
    #[error("number of runs must be positive")]
    NoRuns,
    #[error("lexicon {0} has no entries")]
    EmptyLexicon(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

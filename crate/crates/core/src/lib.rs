//! Context-aware discourse relation classification over dependency
//! discourse treebanks.
//!
//! The crate covers the experimental pipeline end to end:
//!
//! * [`treebank`]: ingest and validate SciDTB-style dependency discourse
//!   trees, extract relation instances, compute dependency distance statistics.
//! * [`context`]: select preceding context for the first argument (no context,
//!   a preceding sentence window, or the ancestor chain in the gold tree) and
//!   render dataset variants.
//! * [`inference`]: build in-context-learning prompts, talk to a
//!   chat-completion endpoint, run desk-scale baselines, import external
//!   prediction files.
//! * [`evaluation`]: macro-F1 scoring, run aggregation, Wilcoxon signed-rank
//!   test with Bonferroni correction.
//! * [`analysis`]: paired win/loss/tie error analysis and connective lexicon
//!   matching.
//!
//! With the default `parallel` feature, per-document and per-run work is
//! spread over the rayon pool. Without it every loop runs sequentially and
//! produces identical output.

pub mod analysis;
pub mod context;
pub mod evaluation;
pub mod inference;
pub mod par;
pub mod synth;
pub mod text;
pub mod treebank;

pub use context::{ContextScheme, RenderedInstance, VariantDataset};
pub use evaluation::{EvalReport, RunAggregate, SignificanceResult};
pub use inference::{Condition, PredictionSet};
pub use treebank::{Corpus, DiscourseTree, Edu, InstanceId, RelationInstance, Split, Treebank};

//! Producing prediction sets: prompt-based inference against a
//! chat-completion endpoint, desk-scale baselines, and import of prediction
//! files written by external models.

mod baseline;
mod endpoint;
mod icl;
mod output;
mod prediction;
mod prompt;

use thiserror::Error;

use crate::treebank::InstanceId;

pub use baseline::{predict_baseline, subsample, train_baseline, BaselineKind, BaselineModel};
pub use endpoint::{
    run_endpoint_inference, ChatBackend, EndpointConfig, EndpointError, EndpointRun,
    HttpChatClient, LogRecord,
};
pub use icl::{sample_icl_examples, IclExample};
pub use output::parse_llm_output;
pub use prediction::{
    import_predictions, read_predictions, Condition, PredictionRecord, PredictionSet, UNPARSED,
};
pub use prompt::{build_prompt, PromptSpec};

fn list_ids(ids: &[InstanceId]) -> String {
    const SHOW: usize = 10;
    let mut s = ids
        .iter()
        .take(SHOW)
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    if ids.len() > SHOW {
        s.push_str(&format!(" and {} more", ids.len() - SHOW));
    }
    s
}

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("predictions reference unknown instances: {}", list_ids(.0))]
    UnknownInstances(Vec<InstanceId>),
    #[error("predictions missing for instances: {}", list_ids(.0))]
    MissingInstances(Vec<InstanceId>),
    #[error("duplicate prediction for {0}")]
    DuplicateInstance(InstanceId),
    #[error("prediction file mixes {0}")]
    Inconsistent(String),
    #[error("prediction file is empty")]
    EmptyFile,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("label {0:?} has no training instances")]
    MissingTrainingLabel(String),
    #[error("training data is empty")]
    EmptyTraining,
    #[error("prompt needs exactly one example per label, in inventory order")]
    InvalidPromptSpec,
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
    #[error("endpoint failed after {completed} completed requests: {source}")]
    Endpoint {
        completed: usize,
        #[source]
        source: EndpointError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

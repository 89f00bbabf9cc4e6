use super::{IclExample, InferenceError};
use crate::context::RenderedInstance;

const INSTRUCTION: &str =
    "Replace the MASK token (a discourse relation) by selecting only one of the following labels:";

/// Everything needed to render one classification prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSpec {
    pub label_inventory: Vec<String>,
    pub icl_examples: Vec<IclExample>,
    pub target: RenderedInstance,
    pub connective_token: String,
}

impl PromptSpec {
    /// Checks that there is exactly one example per label, in inventory
    /// order. The target's own connective is used.
    pub fn new(
        label_inventory: Vec<String>,
        icl_examples: Vec<IclExample>,
        target: RenderedInstance,
    ) -> Result<Self, InferenceError> {
        let ordered = icl_examples.len() == label_inventory.len()
            && icl_examples
                .iter()
                .zip(&label_inventory)
                .all(|(ex, label)| ex.label == *label);
        if !ordered {
            return Err(InferenceError::InvalidPromptSpec);
        }
        let connective_token = target.connective.clone();
        Ok(PromptSpec {
            label_inventory,
            icl_examples,
            target,
            connective_token,
        })
    }
}

fn passage_line(arg1: &str, arg2: &str, connective: &str, answer: &str) -> String {
    format!("Passage 1: {arg1}, Passage 2: {arg2}, connective: {connective} | {answer}")
}

/// Renders the MASK-replacement prompt.
///
/// The instruction, the bracketed label list and the first example share the
/// first line; each further example gets its own line; the last line is the
/// target with `[MASK]` and no trailing newline. Context, if any, is part of
/// the target's first passage.
pub fn build_prompt(spec: &PromptSpec) -> String {
    let mut lines = Vec::with_capacity(spec.icl_examples.len() + 1);
    let labels = spec.label_inventory.join(", ");
    for (k, ex) in spec.icl_examples.iter().enumerate() {
        let line = passage_line(&ex.arg1, &ex.arg2, &ex.connective, &ex.label);
        if k == 0 {
            lines.push(format!("{INSTRUCTION} [{labels}] Examples: {line}"));
        } else {
            lines.push(line);
        }
    }
    let target = passage_line(
        &spec.target.model_input(),
        &spec.target.arg2_text,
        &spec.connective_token,
        "[MASK]",
    );
    if lines.is_empty() {
        lines.push(format!("{INSTRUCTION} [{labels}] {target}"));
    } else {
        lines.push(target);
    }
    lines.join("\n")
}

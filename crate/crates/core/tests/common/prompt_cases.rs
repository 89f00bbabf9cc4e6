// Prompt golden cases, shared with the CLI acceptance suite.

use discoctx::context::{render_instance, select_context, ContextOptions, ContextScheme};
use discoctx::inference::{IclExample, PromptSpec};
use discoctx::synth::simrank_example;
use discoctx::treebank::{extract_instances, Split};

fn ex(arg1: &str, arg2: &str, connective: &str, label: &str) -> IclExample {
    IclExample {
        arg1: arg1.into(),
        arg2: arg2.into(),
        connective: connective.into(),
        label: label.into(),
    }
}

/// (golden file name, spec)
pub fn prompt_cases() -> Vec<(&'static str, PromptSpec)> {
    let tree = simrank_example();
    let inst = extract_instances(&tree)
        .into_iter()
        .find(|i| i.arg2_edu_id == 4)
        .unwrap();
    let target = |scheme: ContextScheme, connective: &str| {
        let frags = select_context(&tree, &inst, scheme, ContextOptions::default()).unwrap();
        let mut t = render_instance(&inst, &frags, scheme, Split::Test);
        t.connective = connective.into();
        t
    };
    let inv3: Vec<String> = ["condition", "contrast", "elaboration"].map(String::from).to_vec();
    let inv2: Vec<String> = ["cause", "joint"].map(String::from).to_vec();
    let spec = |inv: &Vec<String>, exs, t| PromptSpec::new(inv.clone(), exs, t).unwrap();
    vec![
        (
            "inv3_default.txt",
            spec(
                &inv3,
                vec![
                    ex("the index is rebuilt nightly", "if the corpus changes", "none", "condition"),
                    ex("earlier parsers are slow", "while ours runs in linear time", "none", "contrast"),
                    ex("we release a toolkit", "that reads all formats", "none", "elaboration"),
                ],
                target(ContextScheme::Default, "none"),
            ),
        ),
        (
            "inv3_or1.txt",
            spec(
                &inv3,
                vec![
                    ex("updates arrive hourly the index is rebuilt nightly", "if the corpus changes", "none", "condition"),
                    ex("speed matters earlier parsers are slow", "while ours runs in linear time", "none", "contrast"),
                    ex("we release a toolkit", "that reads all formats", "none", "elaboration"),
                ],
                target(ContextScheme::Oracle(1), "none"),
            ),
        ),
        (
            "inv2_default.txt",
            spec(
                &inv2,
                vec![
                    ex("the loss diverged", "because the rate was too high", "because", "cause"),
                    ex("we tag the data", "and we parse it", "and", "joint"),
                ],
                target(ContextScheme::Default, "without"),
            ),
        ),
        (
            "inv2_or2.txt",
            spec(
                &inv2,
                vec![
                    ex("training was unstable the loss diverged", "because the rate was too high", "because", "cause"),
                    ex("we tag the data", "and we parse it", "and", "joint"),
                ],
                target(ContextScheme::Oracle(2), "without"),
            ),
        ),
    ]
}

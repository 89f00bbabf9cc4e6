mod common;

use std::path::Path;

use common::*;
use discoctx::synth::{disambiguation_treebank, simrank_example};
use discoctx::treebank::{serialize_tree, Split};

fn one_edge_corpus(dir: &Path) {
    let d = dir.join("test");
    std::fs::create_dir_all(&d).unwrap();
    std::fs::write(
        d.join("a.dep"),
        r#"{"root":[{"id":0,"parent":-1,"text":"ROOT","relation":"null"},
                    {"id":1,"parent":0,"text":"We parse .","relation":"ROOT"},
                    {"id":2,"parent":1,"text":"because it helps .","relation":"cause"}]}"#,
    )
    .unwrap();
}

#[test]
fn ingest_valid_and_cyclic() {
    let dir = tempfile::tempdir().unwrap();
    one_edge_corpus(dir.path());
    let corpus = dir.path().to_str().unwrap();
    let out = dir.path().join("norm");
    let o = run(&["ingest", corpus, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("test\t1\t2\t1\n"));
    assert!(stdout(&o).contains("0 violations"));
    assert!(out.join("test/a.dep").is_file());

    std::fs::write(
        dir.path().join("test/loop.dep"),
        r#"{"root":[{"id":0,"parent":-1,"text":"ROOT","relation":"null"},
                    {"id":1,"parent":0,"text":"x .","relation":"ROOT"},
                    {"id":2,"parent":3,"text":"y","relation":"joint"},
                    {"id":3,"parent":2,"text":"z","relation":"joint"}]}"#,
    )
    .unwrap();
    let o = run(&["ingest", corpus]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("loop"), "{}", stderr(&o));
    assert!(stderr(&o).contains("cycle"));
    let o = run(&["ingest", corpus, "--lenient"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["validate", corpus]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("loop\tcycle\t"));
}

#[test]
fn stats_on_one_edge() {
    let dir = tempfile::tempdir().unwrap();
    one_edge_corpus(dir.path());
    let o = run(&["stats", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("edu\t1\t100.00\t0.00\n"), "{s}");
    assert!(s.contains("sentence\t1\t100.00\t0.00\n"), "{s}");
}

#[test]
fn missing_corpus_is_config_error() {
    let o = run(&["stats", "/definitely/not/here"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["experiment"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["variants", ".", "--scheme", "XY3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn variants_show_worked_example_context() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("test");
    std::fs::create_dir_all(&d).unwrap();
    std::fs::write(d.join("P14-1131.dep"), serialize_tree(&simrank_example())).unwrap();
    let o = run(&["variants", dir.path().to_str().unwrap(), "--scheme", "OR1", "--split", "test"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o).lines().find(|l| l.contains("condition")).unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(v["context"], "that is efficient");
    assert_eq!(v["arg1"], "because it can compute a single node similarity");
    assert_eq!(v["scheme"], "OR1");
}

#[test]
fn stepwise_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_treebank(&dir.path().join("c"), &disambiguation_treebank(3, 40, 20));
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    for scheme in ["default", "OR1"] {
        for split in ["train", "test"] {
            let o = run(&["variants", corpus.to_str().unwrap(), "--scheme", scheme, "--split", split, "--out", &p(&format!("{scheme}.{split}.jsonl"))]);
            assert!(o.status.success(), "{}", stderr(&o));
        }
        let o = run(&[
            "infer", "--eval", &p(&format!("{scheme}.test.jsonl")), "--train", &p(&format!("{scheme}.train.jsonl")),
            "--backend", "cue", "--train-fraction", "0.5", "--seeds", "0,1,2,3,4,5", "--out", &p(&format!("pred-{scheme}")),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let runs = |scheme: &str| (0..6).map(|s| p(&format!("pred-{scheme}/run{s}.jsonl"))).collect::<Vec<_>>();
    let eval = p("OR1.test.jsonl");

    let mut args = vec!["evaluate".to_string(), "--eval".into(), eval.clone()];
    args.extend(runs("OR1"));
    let o = bin().args(&args).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("OR1:cue\t0\t1.000000\t1.000000\t60\t0\n"), "{}", stdout(&o));
    assert!(stdout(&o).contains("OR1:cue\tmean\t1.000000"));

    let mut args = vec!["compare".to_string(), "--eval".into(), eval.clone(), "--m".into(), "1".into(), "--a".into()];
    args.extend(runs("default"));
    args.push("--b".into());
    args.extend(runs("OR1"));
    let o = bin().args(&args).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(row.starts_with("OR1:cue\tdefault:cue\t6\t"), "{row}");

    args[0] = "analyze".into();
    let m = args.iter().position(|a| a == "--m").unwrap();
    args.drain(m..m + 2);
    let o = bin().args(&args).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.starts_with("relation\twins\tlosses\tties\tdelta\tcategory\n"));
    assert!(s.contains("category\tmatched\ttotal\tpercentage\n"));
}

fn write_config(dir: &Path, corpus: &Path, body: &str) -> std::path::PathBuf {
    let cfg = dir.join("exp.toml");
    std::fs::write(
        &cfg,
        format!("schema_version = 1\noutput_dir = \"out\"\n{body}\n[[corpora]]\nname = \"fixture\"\npath = {:?}\n", corpus),
    )
    .unwrap();
    cfg
}

#[test]
fn experiment_majority_single_seed() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_treebank(&dir.path().join("c"), &disambiguation_treebank(1, 10, 10));
    let cfg = write_config(
        dir.path(),
        &corpus,
        "seeds = [0]\nschemes = [\"default\"]\nbonferroni_m = 1\n[[backends]]\nkind = \"baseline\"\nname = \"majority\"\nbaseline = \"majority\"\n",
    );
    let o = run(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("majority default\t"), "{}", stdout(&o));
    assert!(stdout(&o).contains("(n=1)"));
    let out = dir.path().join("out");
    assert!(out.join("fixture/majority/default/run0.eval.tsv").is_file());
    let table = run(&["table", out.to_str().unwrap()]);
    assert_eq!(stdout(&table), stdout(&o));
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                files.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn experiment_is_idempotent_and_reuses_stages() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_treebank(&dir.path().join("c"), &disambiguation_treebank(5, 30, 12));
    let cfg = write_config(
        dir.path(),
        &corpus,
        "seeds = [0, 1, 2]\nschemes = [\"default\", \"OR1\", \"AD1\"]\nbonferroni_m = 2\n[analysis]\na = \"default\"\nb = \"OR1\"\n[[backends]]\nkind = \"baseline\"\nname = \"cue\"\nbaseline = \"cue\"\ntrain_fraction = 0.6\n",
    );
    let cfg = cfg.to_str().unwrap();
    let first = run(&["experiment", "--config", cfg]);
    assert!(first.status.success(), "{}", stderr(&first));
    let out = dir.path().join("out");
    let before = snapshot(&out);
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["stages"].as_object().unwrap().len(), 9);
    assert!(out.join("fixture/cue/analysis-OR1-vs-default/margins.tsv").is_file());
    assert!(out.join("significance.tsv").is_file());

    let second = bin().args(["experiment", "--config", cfg, "-v"]).output().unwrap();
    assert!(second.status.success());
    assert_eq!(stdout(&first), stdout(&second));
    assert_eq!(snapshot(&out), before);
    assert!(stderr(&second).contains("reusing predict/fixture/cue/OR1/2"), "{}", stderr(&second));
}

#[test]
fn imported_predictions_table_has_daggers() {
    let dir = tempfile::tempdir().unwrap();
    let tb = disambiguation_treebank(9, 20, 16);
    let corpus = write_treebank(&dir.path().join("c"), &tb);
    // external model: perfect under OR1, wrong on the first k instances under default
    let preds = dir.path().join("preds");
    for scheme in ["default", "OR1"] {
        let o = run(&["variants", corpus.to_str().unwrap(), "--scheme", scheme, "--split", "test", "--out", preds.join(format!("{scheme}.jsonl")).to_str().unwrap()]);
        assert!(o.status.success());
        let text = std::fs::read_to_string(preds.join(format!("{scheme}.jsonl"))).unwrap();
        for seed in 0..10u64 {
            let mut lines = String::new();
            for (k, l) in text.lines().enumerate() {
                let v: serde_json::Value = serde_json::from_str(l).unwrap();
                let wrong = scheme == "default" && k < 3 + seed as usize;
                let label = if wrong { "joint" } else { v["label"].as_str().unwrap() };
                let label = if wrong && v["label"] == "joint" { "elaboration" } else { label };
                lines.push_str(&serde_json::json!({
                    "instance_id": v["instance_id"], "predicted_label": label,
                    "condition": format!("{scheme}:roberta"), "run_id": seed,
                }).to_string());
                lines.push('\n');
            }
            std::fs::write(preds.join(format!("{scheme}-run{seed}.jsonl")), lines).unwrap();
        }
    }
    let cfg = write_config(
        dir.path(),
        &corpus,
        "seeds = [0,1,2,3,4,5,6,7,8,9]\nschemes = [\"default\", \"OR1\"]\nbonferroni_m = 2\n[[backends]]\nkind = \"import\"\nname = \"roberta\"\npredictions = \"preds/{scheme}-run{seed}.jsonl\"\n",
    );
    let o = run(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    let or1 = table.lines().find(|l| l.starts_with("roberta OR1")).unwrap();
    assert_eq!(or1, "roberta OR1\t100.00 (0.00)†");
    let default = table.lines().find(|l| l.starts_with("roberta default")).unwrap();
    assert!(!default.contains('†'));
    let _ = Split::Test;
}

#[test]
fn endpoint_failures_exit_3_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let tb = disambiguation_treebank(2, 8, 6);
    let corpus = write_treebank(&dir.path().join("c"), &tb);
    let test = discoctx::context::build_variant_dataset(&tb, "OR1".parse().unwrap(), Split::Test, Default::default()).unwrap();
    let echo = gold_echo(gold_by_target(&test));
    // request 5 is refused with 401, everything else is answered
    let server = MockServer::start(move |k, prompt| if k == 5 { (401, "no".into()) } else { echo(k, prompt) });
    let cfg = write_config(
        dir.path(),
        &corpus,
        &format!(
            "seeds = [0]\nschemes = [\"OR1\"]\nreference = \"OR1\"\nbonferroni_m = 1\n[[backends]]\nkind = \"endpoint\"\nname = \"llm\"\n[backends.endpoint]\nbase_url = {:?}\nmodel = \"mock\"\nparallelism = 1\ntoken_env = \"DISCOCTX_MOCK_TOKEN\"\nbackoff_base_ms = 1\n",
            server.url
        ),
    );
    let cfg = cfg.to_str().unwrap();
    let o = bin().args(["experiment", "--config", cfg]).env_remove("DISCOCTX_MOCK_TOKEN").output().unwrap();
    assert_eq!(o.status.code(), Some(2), "missing token is a config error: {}", stderr(&o));
    let o = bin().args(["experiment", "--config", cfg]).env("DISCOCTX_MOCK_TOKEN", "t").output().unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("rerun to resume"));
    let o = bin().args(["experiment", "--config", cfg]).env("DISCOCTX_MOCK_TOKEN", "t").output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(server.request_count(), test.len() + 1);
    assert!(stdout(&o).contains("llm OR1\t100.00 (n=1)"), "{}", stdout(&o));
}

//! The `experiment` pipeline: variants, predictions, scores, significance,
//! paired analysis and the results table.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use discoctx::analysis::{
    connective_match_rate, default_lexicon, load_connective_lexicon, pair_outcomes,
    relation_margins, write_margins_tsv, MatchOptions,
};
use discoctx::context::{build_variant_dataset, ContextOptions, ContextScheme, VariantDataset};
use discoctx::evaluation::{
    aggregate_runs, bonferroni, render_table, score, wilcoxon_signed_rank, write_eval_tsv,
    write_significance_tsv, RunAggregate, SignificanceResult, TableCell,
};
use discoctx::inference::{
    import_predictions, predict_baseline, run_endpoint_inference, subsample, train_baseline,
    Condition, HttpChatClient, PredictionSet,
};
use discoctx::treebank::{Split, Treebank};
use serde::{Deserialize, Serialize};

use crate::commands::{check_failures, counts_tsv, load, stats_tsv, write_file};
use crate::config::{expand_template, BackendConfig, ExperimentConfig};
use crate::error::{data_bail, Classify, Failure, Outcome};
use crate::manifest::RunManifest;

pub const SUMMARY_FILE: &str = "summary.json";
pub const TABLE_FILE: &str = "table.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub corpus: String,
    pub backend: String,
    pub scheme: ContextScheme,
    pub aggregate: RunAggregate,
    /// None for the reference scheme.
    pub significant: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub cells: Vec<SummaryCell>,
    pub comparisons: Vec<SignificanceResult>,
}

impl Summary {
    pub fn table(&self) -> String {
        let cells: Vec<TableCell> = self
            .cells
            .iter()
            .map(|c| TableCell {
                row: format!("{} {}", c.backend, c.scheme),
                column: c.corpus.clone(),
                aggregate: c.aggregate.clone(),
                significant: c.significant.unwrap_or(false),
            })
            .collect();
        render_table(&cells)
    }
}

fn key(corpus: &str, backend: &str, scheme: ContextScheme) -> String {
    format!("{corpus}/{backend}/{scheme}")
}

struct Run<'a> {
    config: &'a ExperimentConfig,
    out: PathBuf,
    manifest: RunManifest,
}

pub fn run(config_path: &Path, out_override: Option<&Path>) -> Outcome {
    let mut config = ExperimentConfig::load(config_path).config()?;
    if let Some(o) = out_override {
        config.output_dir = Some(o.to_path_buf());
    }
    let hash = config.hash();
    let out = config.output_dir().to_path_buf();
    let manifest = RunManifest::open(&out, &hash).data()?;
    let mut ctx = Run {
        config: &config,
        out,
        manifest,
    };
    let mut cells = Vec::new();
    let mut comparisons = Vec::new();
    for corpus in &config.corpora {
        let report = load(&corpus.path, &corpus.name, corpus.format)?;
        check_failures(&report, corpus.lenient)?;
        let dir = ctx.out.join(&corpus.name);
        write_file(&dir.join("counts.tsv"), counts_tsv(&report).as_bytes())?;
        let trees: Vec<_> = report
            .treebank
            .splits
            .values()
            .flat_map(|c| c.trees.iter().cloned())
            .collect();
        write_file(&dir.join("stats.tsv"), stats_tsv(&trees, &corpus.name)?.as_bytes())?;
        let (c, s) = run_corpus(&mut ctx, &corpus.name, &report.treebank)?;
        cells.extend(c);
        comparisons.extend(s);
    }
    bonferroni(&mut comparisons, config.bonferroni_m, config.alpha).config()?;
    for cell in &mut cells {
        if cell.scheme != config.reference {
            let name = key(&cell.corpus, &cell.backend, cell.scheme);
            cell.significant = comparisons.iter().find(|c| c.a == name).map(|c| c.significant);
        }
    }
    let mut sig = Vec::new();
    write_significance_tsv(&comparisons, &mut sig).data()?;
    write_file(&ctx.out.join("significance.tsv"), &sig)?;
    let summary = Summary {
        config_hash: hash,
        cells,
        comparisons,
    };
    let json = serde_json::to_string_pretty(&summary).data()? + "\n";
    write_file(&ctx.out.join(SUMMARY_FILE), json.as_bytes())?;
    let table = summary.table();
    write_file(&ctx.out.join(TABLE_FILE), table.as_bytes())?;
    print!("{table}");
    Ok(())
}

fn write_variants(ctx: &Run, corpus: &str, ds: &VariantDataset) -> Outcome {
    let p = ctx
        .out
        .join(corpus)
        .join("variants")
        .join(ds.scheme.to_string())
        .join(format!("{}.jsonl", ds.split));
    write_file(&p, ds.to_jsonl().as_bytes())
}

fn run_corpus(
    ctx: &mut Run,
    corpus: &str,
    treebank: &Treebank,
) -> Outcome<(Vec<SummaryCell>, Vec<SignificanceResult>)> {
    let config = ctx.config;
    let options = ContextOptions {
        include_relations: config.include_relations,
    };
    let mut eval_sets = BTreeMap::new();
    let mut train_sets = BTreeMap::new();
    for &scheme in &config.schemes {
        let eval = build_variant_dataset(treebank, scheme, config.eval_split, options).data()?;
        write_variants(ctx, corpus, &eval)?;
        eval_sets.insert(scheme, eval);
        if treebank.split(Split::Train).is_some() && config.eval_split != Split::Train {
            let train = build_variant_dataset(treebank, scheme, Split::Train, options).data()?;
            write_variants(ctx, corpus, &train)?;
            train_sets.insert(scheme, train);
        }
    }

    let mut cells = Vec::new();
    let mut comparisons = Vec::new();
    for backend in &config.backends {
        let mut runs: BTreeMap<ContextScheme, Vec<PredictionSet>> = BTreeMap::new();
        let mut aggregates = BTreeMap::new();
        for &scheme in &config.schemes {
            let eval = &eval_sets[&scheme];
            let mut reports = Vec::new();
            for &seed in &config.seeds {
                let preds = predictions(ctx, corpus, backend, eval, train_sets.get(&scheme), seed)?;
                let report = score(eval, &preds).data()?;
                let base = run_dir(ctx, corpus, backend.name(), scheme);
                let mut tsv = Vec::new();
                write_eval_tsv(&report, &mut tsv).data()?;
                write_file(&base.join(format!("run{seed}.eval.tsv")), &tsv)?;
                let json = serde_json::to_string_pretty(&report).data()? + "\n";
                write_file(&base.join(format!("run{seed}.eval.json")), json.as_bytes())?;
                reports.push(report);
                runs.entry(scheme).or_default().push(preds);
            }
            let agg = aggregate_runs(&reports).data()?;
            cells.push(SummaryCell {
                corpus: corpus.to_string(),
                backend: backend.name().to_string(),
                scheme,
                aggregate: agg.clone(),
                significant: None,
            });
            aggregates.insert(scheme, agg);
        }
        let reference = &aggregates[&config.reference];
        for (&scheme, agg) in &aggregates {
            if scheme == config.reference {
                continue;
            }
            // paired by seed; aggregates keep run ids sorted
            let r = wilcoxon_signed_rank(&agg.per_run_scores, &reference.per_run_scores)
                .data()?
                .labelled(
                    key(corpus, backend.name(), scheme),
                    key(corpus, backend.name(), config.reference),
                );
            comparisons.push(r);
        }
        if let Some(analysis) = &config.analysis {
            analyze(ctx, corpus, backend.name(), &eval_sets[&analysis.a], &runs)?;
        }
    }
    Ok((cells, comparisons))
}

fn run_dir(ctx: &Run, corpus: &str, backend: &str, scheme: ContextScheme) -> PathBuf {
    ctx.out.join(corpus).join(backend).join(scheme.to_string())
}

fn predictions(
    ctx: &mut Run,
    corpus: &str,
    backend: &BackendConfig,
    eval: &VariantDataset,
    train: Option<&VariantDataset>,
    seed: u64,
) -> Outcome<PredictionSet> {
    let scheme = eval.scheme;
    let stage = format!("predict/{}/{seed}", key(corpus, backend.name(), scheme));
    let path = run_dir(ctx, corpus, backend.name(), scheme).join(format!("run{seed}.predictions.jsonl"));
    if ctx.manifest.is_complete(&stage) {
        log::info!("reusing {stage}");
        return import_predictions(&path, eval)
            .with_context(|| format!("reading {}", path.display()))
            .data();
    }
    let condition = Condition::new(scheme, backend.name());
    let need_train = || -> Outcome<&VariantDataset> {
        match train {
            Some(t) => Ok(t),
            None => data_bail!("backend {} needs a train split in corpus {corpus}", backend.name()),
        }
    };
    let preds = match backend {
        BackendConfig::Baseline {
            baseline,
            train_fraction,
            ..
        } => {
            let model = train_baseline(&subsample(need_train()?, *train_fraction, seed), *baseline)?;
            predict_baseline(&model, eval, backend.name(), seed)
        }
        BackendConfig::Endpoint { endpoint, .. } => {
            let client = HttpChatClient::new(endpoint).config()?;
            let log_path = path.with_extension("log.jsonl");
            if let Some(parent) = log_path.parent() {
                std::fs::create_dir_all(parent).data()?;
            }
            let run = run_endpoint_inference(eval, need_train()?, endpoint, seed, &client, Some(&log_path))
                .map_err(|e| match Failure::from(e) {
                    Failure::Endpoint(e) => Failure::Endpoint(e.context(format!("{stage}; rerun to resume"))),
                    other => other,
                })?;
            log::info!("{stage}: {} requests, {} retries, {} resumed", run.requests, run.retries, run.resumed);
            PredictionSet::new(condition, seed, run.predictions.records)
        }
        BackendConfig::Import { predictions, .. } => {
            let src = expand_template(predictions, corpus, scheme, seed);
            let set = import_predictions(Path::new(&src), eval)
                .with_context(|| format!("importing {src}"))
                .data()?;
            if set.condition.scheme != scheme || set.run_id != seed {
                log::warn!("{src} is labelled {} run {}; filed as {condition} run {seed}", set.condition, set.run_id);
            }
            PredictionSet::new(condition, seed, set.records)
        }
    };
    write_file(&path, preds.to_jsonl().as_bytes())?;
    ctx.manifest.complete(&stage, &[&path]).data()?;
    Ok(preds)
}

fn analyze(
    ctx: &Run,
    corpus: &str,
    backend: &str,
    gold: &VariantDataset,
    runs: &BTreeMap<ContextScheme, Vec<PredictionSet>>,
) -> Outcome {
    let a = ctx.config.analysis.as_ref().expect("analysis configured");
    let lexicon = match &a.lexicon {
        Some(p) => load_connective_lexicon(p).config()?,
        None => default_lexicon(),
    };
    let mut outcomes = Vec::new();
    for (pa, pb) in runs[&a.a].iter().zip(&runs[&a.b]) {
        outcomes.extend(pair_outcomes(gold, pa, pb, pa.run_id).data()?);
    }
    let margins = relation_margins(&outcomes, ctx.config.seeds.len(), a.delta).data()?;
    let matches = connective_match_rate(
        gold,
        &margins,
        &lexicon,
        MatchOptions {
            level: a.level,
            multiword: a.multiword,
        },
    );
    let dir = ctx.out.join(corpus).join(backend).join(format!("analysis-{}-vs-{}", a.b, a.a));
    let mut m = Vec::new();
    write_margins_tsv(&margins, &mut m).data()?;
    write_file(&dir.join("margins.tsv"), &m)?;
    let mut c = Vec::new();
    matches.write_tsv(&mut c).data()?;
    write_file(&dir.join("connectives.tsv"), &c)
}

/// The results table of a finished experiment directory.
pub fn table(dir: &Path) -> Outcome<String> {
    let path = dir.join(SUMMARY_FILE);
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading {}", path.display()))
        .data()?;
    let summary: Summary = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .data()?;
    Ok(summary.table())
}

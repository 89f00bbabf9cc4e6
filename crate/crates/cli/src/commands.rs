use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use discoctx::analysis::{
    connective_match_rate, default_lexicon, load_connective_lexicon, pair_outcomes,
    relation_margins, write_margins_tsv, DeltaDefinition, MatchLevel, MatchOptions,
};
use discoctx::context::{build_variant_dataset, ContextOptions, ContextScheme, VariantDataset};
use discoctx::evaluation::{
    aggregate_runs, bonferroni, score, wilcoxon_signed_rank, write_eval_tsv,
    write_significance_tsv, EvalReport,
};
use discoctx::inference::{
    import_predictions, predict_baseline, run_endpoint_inference, subsample, train_baseline,
    BaselineKind, EndpointConfig, HttpChatClient, PredictionSet,
};
use discoctx::treebank::{
    dependency_distance_stats, load_treebank, serialize_tree, CanonicalReader, LoadReport, Split,
    TabularReader, TreeReader,
};

use crate::config::CorpusFormat;
use crate::error::{config_bail, data_bail, Classify, Failure, Outcome};
use crate::{BackendArg, Cli, Command, CorpusArgs, DeltaArg, LevelArg};

pub fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Ingest { corpus, lenient } => ingest(&cli, corpus, *lenient),
        Command::Validate { corpus } => validate(corpus),
        Command::Stats { corpus, lenient } => stats(&cli, corpus, *lenient),
        Command::Variants { corpus, relations } => variants(&cli, corpus, *relations),
        Command::Infer { .. } => infer(&cli),
        Command::Evaluate { eval, predictions } => evaluate(&cli, eval, predictions),
        Command::Compare { eval, a, b, m, alpha } => compare(eval, a, b, *m, *alpha),
        Command::Analyze { .. } => analyze(&cli),
        Command::Experiment => {
            let Some(path) = &cli.config else {
                config_bail!("experiment needs --config");
            };
            crate::experiment::run(path, cli.out.as_deref())
        }
        Command::Table { dir } => {
            let Some(dir) = dir.as_ref().or(cli.out.as_ref()) else {
                config_bail!("table needs an experiment output directory");
            };
            print!("{}", crate::experiment::table(dir)?);
            Ok(())
        }
    }
}

pub fn reader_for(format: CorpusFormat) -> &'static dyn TreeReader {
    match format {
        CorpusFormat::Dep => &CanonicalReader,
        CorpusFormat::Tsv => &TabularReader,
    }
}

fn corpus_name(args: &CorpusArgs) -> String {
    args.name.clone().unwrap_or_else(|| {
        args.corpus
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "corpus".to_string())
    })
}

pub fn load(dir: &Path, name: &str, format: CorpusFormat) -> Outcome<LoadReport> {
    if !dir.is_dir() {
        config_bail!("corpus directory {} does not exist", dir.display());
    }
    let report = load_treebank(dir, name, reader_for(format)).data()?;
    if report.treebank.splits.is_empty() && report.failures.is_empty() {
        data_bail!("no documents found under {}", dir.display());
    }
    Ok(report)
}

fn print_violations(report: &LoadReport) {
    for f in &report.failures {
        for v in f.error.violations() {
            eprintln!("{}\t{v}", f.path.display());
        }
    }
}

/// Fails unless every document loaded, or `lenient` is set.
pub fn check_failures(report: &LoadReport, lenient: bool) -> Outcome {
    if report.failures.is_empty() {
        return Ok(());
    }
    if lenient {
        log::warn!("skipping {} invalid documents", report.failures.len());
        return Ok(());
    }
    let docs: Vec<String> = report
        .failures
        .iter()
        .map(|f| f.path.display().to_string())
        .collect();
    data_bail!(
        "{} documents failed validation ({} violations): {}",
        docs.len(),
        report.violations().len(),
        docs.join(", ")
    )
}

pub fn counts_tsv(report: &LoadReport) -> String {
    let mut s = String::from("split\tdocuments\tedus\tinstances\n");
    for (split, c) in &report.treebank.splits {
        s.push_str(&format!(
            "{split}\t{}\t{}\t{}\n",
            c.trees.len(),
            c.edu_count(),
            c.instances().len()
        ));
    }
    s
}

pub fn write_file(path: &Path, contents: &[u8]) -> Outcome {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))
            .data()?;
    }
    std::fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .data()
}

fn emit(out: Option<&Path>, contents: &str) -> Outcome {
    match out {
        Some(p) => write_file(p, contents.as_bytes()),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn ingest(cli: &Cli, args: &CorpusArgs, lenient: bool) -> Outcome {
    let report = load(&args.corpus, &corpus_name(args), args.format)?;
    print_violations(&report);
    let counts = counts_tsv(&report);
    print!("{counts}");
    println!("{} violations", report.violations().len());
    if let Some(out) = &cli.out {
        for (split, c) in &report.treebank.splits {
            for tree in &c.trees {
                let p = out.join(split.as_str()).join(format!("{}.dep", tree.doc_id));
                write_file(&p, serialize_tree(tree).as_bytes())?;
            }
        }
        write_file(&out.join("counts.tsv"), counts.as_bytes())?;
        let violations: String = report
            .failures
            .iter()
            .flat_map(|f| f.error.violations())
            .map(|v| format!("{v}\n"))
            .collect();
        write_file(&out.join("violations.tsv"), violations.as_bytes())?;
    }
    check_failures(&report, lenient)
}

fn validate(args: &CorpusArgs) -> Outcome {
    let report = load(&args.corpus, &corpus_name(args), args.format)?;
    for v in report.violations() {
        println!("{v}");
    }
    println!("{} violations", report.violations().len());
    check_failures(&report, false)
}

pub fn stats_tsv(trees: &[discoctx::treebank::DiscourseTree], name: &str) -> Outcome<String> {
    let s = dependency_distance_stats(name, trees).data()?;
    let mut out = String::from("unit\tedges\tadjacent_pct\tgap_3_5_pct\n");
    for (unit, g) in [("edu", &s.edu), ("sentence", &s.sentence)] {
        out.push_str(&format!(
            "{unit}\t{}\t{:.2}\t{:.2}\n",
            s.total,
            100.0 * g.adjacent_fraction,
            100.0 * g.gap_3_to_5_fraction
        ));
    }
    Ok(out)
}

fn stats(cli: &Cli, args: &CorpusArgs, lenient: bool) -> Outcome {
    let name = corpus_name(args);
    let report = load(&args.corpus, &name, args.format)?;
    check_failures(&report, lenient)?;
    let trees: Vec<_> = report
        .treebank
        .splits
        .iter()
        .filter(|(s, _)| cli.split.is_none_or(|want| **s == want))
        .flat_map(|(_, c)| c.trees.iter().cloned())
        .collect();
    emit(cli.out.as_deref(), &stats_tsv(&trees, &name)?)
}

fn variants(cli: &Cli, args: &CorpusArgs, relations: bool) -> Outcome {
    let report = load(&args.corpus, &corpus_name(args), args.format)?;
    check_failures(&report, false)?;
    let scheme = cli.scheme.unwrap_or(ContextScheme::Default);
    let split = cli.split.unwrap_or(Split::Test);
    let options = ContextOptions {
        include_relations: relations,
    };
    let ds = build_variant_dataset(&report.treebank, scheme, split, options).data()?;
    log::info!("{} instances under {scheme}", ds.len());
    emit(cli.out.as_deref(), &ds.to_jsonl())
}

pub fn read_variants(path: &Path) -> Outcome<VariantDataset> {
    let file = File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .data()?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    VariantDataset::read_jsonl(BufReader::new(file), &name)
        .with_context(|| format!("reading {}", path.display()))
        .data()
}

fn read_predictions(path: &Path, ds: &VariantDataset) -> Outcome<PredictionSet> {
    import_predictions(path, ds)
        .with_context(|| format!("reading {}", path.display()))
        .data()
}

fn infer(cli: &Cli) -> Outcome {
    let Command::Infer {
        eval,
        train,
        backend,
        tag,
        train_fraction,
        base_url,
        model,
        parallelism,
        max_retries,
        token_env,
        no_auth,
    } = &cli.command
    else {
        unreachable!()
    };
    let Some(out) = &cli.out else {
        config_bail!("infer needs --out");
    };
    if !(*train_fraction > 0.0 && *train_fraction <= 1.0) {
        config_bail!("--train-fraction must lie in (0, 1]");
    }
    let seeds = if cli.seeds.is_empty() { vec![0] } else { cli.seeds.clone() };
    let eval = read_variants(eval)?;
    let train = read_variants(train)?;
    let path_for = |seed: u64| -> PathBuf {
        if seeds.len() == 1 {
            out.clone()
        } else {
            out.join(format!("run{seed}.jsonl"))
        }
    };
    let mut endpoint = EndpointConfig::default();
    if let BackendArg::Endpoint = backend {
        if let Some(u) = base_url {
            endpoint.base_url = u.clone();
        }
        if let Some(m) = model {
            endpoint.model = m.clone();
        }
        if let Some(p) = parallelism {
            endpoint.parallelism = *p;
        }
        if let Some(r) = max_retries {
            endpoint.max_retries = *r;
        }
        if let Some(t) = token_env {
            endpoint.token_env = Some(t.clone());
        }
        if *no_auth {
            endpoint.token_env = None;
        }
        endpoint.validate()?;
    }
    for &seed in &seeds {
        let path = path_for(seed);
        let preds = match backend {
            BackendArg::Majority | BackendArg::Cue => {
                let kind = if matches!(backend, BackendArg::Cue) {
                    BaselineKind::Cue
                } else {
                    BaselineKind::Majority
                };
                let model = train_baseline(&subsample(&train, *train_fraction, seed), kind)?;
                let tag = tag.clone().unwrap_or_else(|| kind.to_string());
                predict_baseline(&model, &eval, &tag, seed)
            }
            BackendArg::Endpoint => {
                let client = HttpChatClient::new(&endpoint).config()?;
                let log_path = path.with_extension("log.jsonl");
                if let Some(parent) = log_path.parent() {
                    std::fs::create_dir_all(parent).data()?;
                }
                let run = run_endpoint_inference(&eval, &train, &endpoint, seed, &client, Some(&log_path))?;
                log::info!(
                    "seed {seed}: {} requests, {} retries, {} resumed",
                    run.requests,
                    run.retries,
                    run.resumed
                );
                let mut p = run.predictions;
                if let Some(t) = tag {
                    p.condition.model = t.clone();
                }
                p
            }
        };
        write_file(&path, preds.to_jsonl().as_bytes())?;
        eprintln!("{}: {} predictions, {} unparsed", path.display(), preds.len(), preds.unparsed_count);
    }
    Ok(())
}

fn report_line(r: &EvalReport) -> String {
    format!(
        "{}\t{}\t{:.6}\t{:.6}\t{}\t{}\n",
        r.condition, r.run_id, r.macro_f1, r.accuracy, r.n, r.unscorable
    )
}

fn evaluate(cli: &Cli, eval: &Path, predictions: &[PathBuf]) -> Outcome {
    let ds = read_variants(eval)?;
    let mut reports = Vec::new();
    println!("condition\trun\tmacro_f1\taccuracy\tn\tunscorable");
    for p in predictions {
        let set = read_predictions(p, &ds)?;
        let r = score(&ds, &set).data()?;
        print!("{}", report_line(&r));
        if let Some(out) = &cli.out {
            let stem = format!("{}.run{}", r.condition.to_string().replace(':', "_"), r.run_id);
            let mut tsv = Vec::new();
            write_eval_tsv(&r, &mut tsv).data()?;
            write_file(&out.join(format!("{stem}.eval.tsv")), &tsv)?;
            let json = serde_json::to_string_pretty(&r).data()? + "\n";
            write_file(&out.join(format!("{stem}.eval.json")), json.as_bytes())?;
        }
        reports.push(r);
    }
    let mut by_condition: BTreeMap<String, Vec<EvalReport>> = BTreeMap::new();
    for r in reports {
        by_condition.entry(r.condition.to_string()).or_default().push(r);
    }
    for (cond, rs) in by_condition.into_iter().filter(|(_, rs)| rs.len() > 1) {
        let a = aggregate_runs(&rs).data()?;
        println!(
            "{cond}\tmean\t{:.6}\t(sd {:.6}, {} runs)",
            a.mean_macro_f1,
            a.stddev,
            a.n_runs()
        );
    }
    Ok(())
}

/// Scores each file and returns macro-F1 by run id.
fn scores_by_run(ds: &VariantDataset, files: &[PathBuf]) -> Outcome<(String, BTreeMap<u64, PredictionSet>)> {
    let mut runs = BTreeMap::new();
    let mut condition = None;
    for f in files {
        let set = read_predictions(f, ds)?;
        let c = set.condition.to_string();
        if condition.get_or_insert_with(|| c.clone()) != &c {
            data_bail!("{} holds {c}, expected {}", f.display(), condition.unwrap());
        }
        if runs.insert(set.run_id, set).is_some() {
            data_bail!("run id repeated in {}", f.display());
        }
    }
    Ok((condition.unwrap_or_default(), runs))
}

type RunPairs = (String, String, Vec<(PredictionSet, PredictionSet)>);

fn paired_runs(
    ds: &VariantDataset,
    a: &[PathBuf],
    b: &[PathBuf],
) -> Outcome<RunPairs> {
    let (ca, mut ra) = scores_by_run(ds, a)?;
    let (cb, mut rb) = scores_by_run(ds, b)?;
    if ra.keys().ne(rb.keys()) {
        data_bail!(
            "run ids differ: {:?} vs {:?}",
            ra.keys().collect::<Vec<_>>(),
            rb.keys().collect::<Vec<_>>()
        );
    }
    let ids: Vec<u64> = ra.keys().copied().collect();
    let pairs = ids
        .into_iter()
        .map(|id| (ra.remove(&id).unwrap(), rb.remove(&id).unwrap()))
        .collect();
    Ok((ca, cb, pairs))
}

fn compare(eval: &Path, a: &[PathBuf], b: &[PathBuf], m: usize, alpha: f64) -> Outcome {
    let ds = read_variants(eval)?;
    let (ca, cb, pairs) = paired_runs(&ds, a, b)?;
    let mut sa = Vec::new();
    let mut sb = Vec::new();
    for (pa, pb) in &pairs {
        sa.push(score(&ds, pa).data()?.macro_f1);
        sb.push(score(&ds, pb).data()?.macro_f1);
    }
    let mut result = [wilcoxon_signed_rank(&sb, &sa).data()?.labelled(cb, ca)];
    bonferroni(&mut result, m, alpha).config()?;
    let mut out = Vec::new();
    write_significance_tsv(&result, &mut out).data()?;
    std::io::stdout().write_all(&out).data()
}

fn analyze(cli: &Cli) -> Outcome {
    let Command::Analyze {
        eval,
        a,
        b,
        lexicon,
        level,
        multiword,
        delta,
    } = &cli.command
    else {
        unreachable!()
    };
    let ds = read_variants(eval)?;
    let lexicon = match lexicon {
        Some(p) => load_connective_lexicon(p).config()?,
        None => default_lexicon(),
    };
    let (_, _, pairs) = paired_runs(&ds, a, b)?;
    let mut outcomes = Vec::new();
    for (pa, pb) in &pairs {
        outcomes.extend(pair_outcomes(&ds, pa, pb, pa.run_id).data()?);
    }
    let delta = match delta {
        DeltaArg::PerRun => DeltaDefinition::PerRun,
        DeltaArg::PerSupport => DeltaDefinition::PerSupport,
    };
    let margins = relation_margins(&outcomes, pairs.len(), delta).data()?;
    let options = MatchOptions {
        level: match level {
            LevelArg::Instance => MatchLevel::Instance,
            LevelArg::Type => MatchLevel::Type,
        },
        multiword: *multiword,
    };
    let matches = connective_match_rate(&ds, &margins, &lexicon, options);
    let mut m_tsv = Vec::new();
    write_margins_tsv(&margins, &mut m_tsv).data()?;
    let mut c_tsv = Vec::new();
    matches.write_tsv(&mut c_tsv).data()?;
    match &cli.out {
        Some(out) => {
            write_file(&out.join("margins.tsv"), &m_tsv)?;
            write_file(&out.join("connectives.tsv"), &c_tsv)?;
        }
        None => {
            let mut stdout = std::io::stdout();
            stdout.write_all(&m_tsv).data()?;
            stdout.write_all(b"\n").data()?;
            stdout.write_all(&c_tsv).data()?;
        }
    }
    Ok(())
}

impl From<discoctx::evaluation::EvaluationError> for Failure {
    fn from(e: discoctx::evaluation::EvaluationError) -> Self {
        Failure::Data(e.into())
    }
}

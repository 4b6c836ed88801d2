use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ami_core::corpus::{self, label_distribution, load_run_file, render_run_file};
use ami_core::evaluation::TaskBScope;
use ami_core::features::{
    EnabledBlocks, Featurizer, SentenceEmbeddingStore, WordEmbeddingTable, SENTENCE_DIM, WORD_DIM,
};
use ami_core::pipeline::{self, score_task_a, score_task_b, tokenize_dataset, Embeddings, RunConfig, RunInputs};
use ami_core::preprocess::PreprocessConfig;
use ami_core::{Dataset, LoadMode, PredictionRecord, SystemSettings, Task, TrainedSystem};
use anyhow::{Context, Result};

use crate::args::{EvaluateArgs, FeaturizeArgs, InputArgs, PredictArgs, RunArgs, StatsArgs, SystemArgs, TrainArgs};
use crate::config::{parse_blocks, FileConfig};
use crate::{DataError, UsageError};

fn required(flag: Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.ok_or_else(|| {
        UsageError(format!(
            "missing --{name} (or `{}` in the config file)",
            name.replace('-', "_")
        ))
        .into()
    })
}

fn usage<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| UsageError(e.to_string()).into())
}

fn mode(lenient: bool) -> LoadMode {
    if lenient {
        LoadMode::Lenient
    } else {
        LoadMode::Strict
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_dataset(path: &Path, labeled: bool, lenient: bool) -> Result<Dataset> {
    let (d, issues) = Dataset::load(path, labeled, mode(lenient))?;
    for issue in &issues {
        log::warn!("{}: line {}: {}", path.display(), issue.line, issue.message);
    }
    Ok(d)
}

fn settings(sys: &SystemArgs, cfg: &FileConfig, default_task: Task) -> Result<SystemSettings> {
    let task = match sys.task.as_ref().or(cfg.task.as_ref()) {
        Some(t) => usage(t.parse::<Task>())?,
        None => default_task,
    };
    let engine_name = sys.engine.as_deref().or(cfg.engine.as_deref()).unwrap_or("lr");
    let engine = usage(cfg.engine(engine_name))?;
    let sub_engine = |flag: &Option<String>, key: &Option<String>| -> Result<Option<_>> {
        flag.as_deref()
            .or(key.as_deref())
            .map(|n| usage(cfg.engine(n)))
            .transpose()
    };
    let blocks = match sys.blocks.as_deref().or(cfg.blocks.as_deref()) {
        Some(b) => usage(parse_blocks(b))?,
        None => EnabledBlocks::default(),
    };
    Ok(SystemSettings {
        task,
        blocks,
        tfidf: cfg.tfidf.unwrap_or_default(),
        stages: cfg.stages.unwrap_or_default(),
        engine,
        category_engine: sub_engine(&sys.category_engine, &cfg.category_engine)?,
        target_engine: sub_engine(&sys.target_engine, &cfg.target_engine)?,
    })
}

fn word_table(path: Option<PathBuf>, blocks: EnabledBlocks, lenient: bool) -> Result<Option<WordEmbeddingTable>> {
    if !blocks.bowv {
        return Ok(None);
    }
    let path = required(path, "word-embeddings")?;
    let (table, stats) = WordEmbeddingTable::load(&path, WORD_DIM, lenient)?;
    log::info!(
        "{}: {} vectors, {} skipped, {} duplicates",
        path.display(),
        stats.loaded,
        stats.skipped,
        stats.duplicates
    );
    Ok(Some(table))
}

fn sentence_store(path: Option<PathBuf>, blocks: EnabledBlocks, flag: &str) -> Result<Option<SentenceEmbeddingStore>> {
    if !blocks.sentence {
        return Ok(None);
    }
    let path = required(path, flag)?;
    Ok(Some(SentenceEmbeddingStore::load(&path, SENTENCE_DIM)?))
}

fn probability_table(records: &[PredictionRecord]) -> String {
    let mut out = String::from("id\tp_misogynous");
    for c in ami_core::Category::ALL {
        write!(out, "\tp_{c}").unwrap();
    }
    out.push_str("\tp_active\n");
    for r in records {
        write!(out, "{}\t{}", r.id, r.p_misogynous).unwrap();
        match &r.category_probabilities {
            Some(ps) => ps.iter().for_each(|p| write!(out, "\t{p}").unwrap()),
            None => (0..ami_core::Category::ALL.len()).for_each(|_| out.push('\t')),
        }
        match r.p_active {
            Some(p) => writeln!(out, "\t{p}").unwrap(),
            None => out.push_str("\t\n"),
        }
    }
    out
}

pub fn stats(args: StatsArgs, cfg: &FileConfig) -> Result<()> {
    let path = required(args.data.or(cfg.data.clone()).or(cfg.train.clone()), "data")?;
    let d = load_dataset(&path, true, args.lenient || cfg.lenient.unwrap_or(false))?;
    print!("{}", label_distribution(&d)?.to_table());
    Ok(())
}

fn input_paths(input: &InputArgs, cfg: &FileConfig) -> (Option<PathBuf>, Option<PathBuf>, Option<PathBuf>, bool) {
    (
        input.train.clone().or(cfg.train.clone()),
        input.word_embeddings.clone().or(cfg.word_embeddings.clone()),
        input
            .train_sentence_embeddings
            .clone()
            .or(cfg.train_sentence_embeddings.clone()),
        input.lenient || cfg.lenient.unwrap_or(false),
    )
}

pub fn featurize(args: FeaturizeArgs, cfg: &FileConfig) -> Result<()> {
    let s = settings(&args.system, cfg, Task::A)?;
    let (train, words, _, lenient) = input_paths(&args.input, cfg);
    let train = required(train, "train")?;
    let data = args.data.or(cfg.data.clone()).unwrap_or_else(|| train.clone());
    let sentences = args
        .sentence_embeddings
        .or(cfg.sentence_embeddings.clone())
        .or(args.input.train_sentence_embeddings)
        .or(cfg.train_sentence_embeddings.clone());

    let pre = {
        let mut p = PreprocessConfig::default();
        p.stages = s.stages;
        p
    };
    let train_set = load_dataset(&train, true, lenient)?;
    let fitted = Featurizer::fit(
        &tokenize_dataset(&train_set, &pre),
        s.blocks,
        s.tfidf,
        WORD_DIM,
        SENTENCE_DIM,
    )?;
    let data_set = load_any(&data, lenient)?;
    let words = word_table(words, s.blocks, lenient)?;
    let store = sentence_store(sentences, s.blocks, "sentence-embeddings")?;
    let x = fitted.featurize_all(&tokenize_dataset(&data_set, &pre), words.as_ref(), store.as_ref())?;

    let layout = x.layout();
    let blocks: Vec<String> = layout
        .blocks
        .iter()
        .map(|b| format!("{}:{}", b.kind.name(), b.len))
        .collect();
    let mut out = format!(
        "# layout {} {} {}\n",
        layout.fingerprint,
        layout.len(),
        blocks.join(",")
    );
    for (tweet, row) in data_set.tweets.iter().zip(x.rows()) {
        out.push_str(&tweet.id);
        out.push('\t');
        let mut first = true;
        row.for_each(|j, v| {
            if v != 0.0 {
                if !first {
                    out.push(' ');
                }
                write!(out, "{j}:{v}").unwrap();
                first = false;
            }
        });
        out.push('\n');
    }
    write_or_print(args.output.or(cfg.output.clone()).as_deref(), &out)
}

/// Loads a dataset that may or may not carry labels.
fn load_any(path: &Path, lenient: bool) -> Result<Dataset> {
    let cfg = RunConfig {
        lenient,
        ..Default::default()
    };
    Ok(cfg.load_eval_dataset(path)?)
}

pub fn train(args: TrainArgs, cfg: &FileConfig) -> Result<()> {
    let s = settings(&args.system, cfg, Task::A)?;
    let (train, words, sentences, lenient) = input_paths(&args.input, cfg);
    let model = required(args.model.or(cfg.model.clone()), "model")?;
    let train_set = load_dataset(&required(train, "train")?, true, lenient)?;
    let words = word_table(words, s.blocks, lenient)?;
    let store = sentence_store(sentences, s.blocks, "train-sentence-embeddings")?;
    let system = pipeline::train_system(
        &train_set,
        Embeddings {
            words: words.as_ref(),
            sentences: store.as_ref(),
        },
        &s,
    )?;
    system.save(&model)?;
    eprintln!(
        "trained task {} system on {} tweets ({} features) -> {}",
        s.task,
        train_set.len(),
        system.featurizer.layout()?.len(),
        model.display()
    );
    Ok(())
}

pub fn predict(args: PredictArgs, cfg: &FileConfig) -> Result<()> {
    let model = required(args.model.or(cfg.model.clone()), "model")?;
    let data = required(args.data.or(cfg.data.clone()).or(cfg.test.clone()), "data")?;
    let lenient = args.lenient || cfg.lenient.unwrap_or(false);
    let system = TrainedSystem::load(&model)?;
    let blocks = system.settings.blocks;
    let words = word_table(args.word_embeddings.or(cfg.word_embeddings.clone()), blocks, lenient)?;
    let sentences = args
        .sentence_embeddings
        .or(cfg.sentence_embeddings.clone())
        .or(cfg.test_sentence_embeddings.clone());
    let store = sentence_store(sentences, blocks, "sentence-embeddings")?;
    let d = load_any(&data, lenient)?;
    let records = system.predict(
        &d,
        Embeddings {
            words: words.as_ref(),
            sentences: store.as_ref(),
        },
    )?;
    if let Some(p) = args.probabilities.or(cfg.probabilities.clone()) {
        write_or_print(Some(&p), &probability_table(&records))?;
    }
    let preds: Vec<_> = records.iter().map(PredictionRecord::to_prediction).collect();
    write_or_print(args.output.or(cfg.output.clone()).as_deref(), &render_run_file(&preds))
}

fn scope(flag: Option<String>, cfg: &FileConfig) -> Result<TaskBScope> {
    match flag.or(cfg.scope.clone()) {
        Some(s) => usage(s.parse()),
        None => Ok(TaskBScope::default()),
    }
}

pub fn evaluate(args: EvaluateArgs, cfg: &FileConfig) -> Result<()> {
    let gold_path = required(args.gold.or(cfg.gold.clone()).or(cfg.test.clone()), "gold")?;
    let run_path = required(args.run.or(cfg.run.clone()).or(cfg.output.clone()), "run")?;
    let task = match args.task.or(cfg.task.clone()) {
        Some(t) => usage(t.parse::<Task>())?,
        None => Task::A,
    };
    let scope = scope(args.scope, cfg)?;
    let gold = load_dataset(&gold_path, true, cfg.lenient.unwrap_or(false))?;
    let run = load_run_file(&run_path)?;
    let records = align(&gold, run)?;
    let mut report = format!("task A\n{}\n", score_task_a(&gold, &records)?);
    if task == Task::B {
        write!(report, "\n{}\n", score_task_b(&gold, &records, scope)?).unwrap();
    }
    print!("{report}");
    if let Some(p) = args.report.or(cfg.report.clone()) {
        write_or_print(Some(&p), &report)?;
    }
    Ok(())
}

/// Orders run-file predictions like the gold file; every gold id must be predicted.
fn align(gold: &Dataset, run: Vec<corpus::Prediction>) -> Result<Vec<PredictionRecord>> {
    let mut by_id: std::collections::HashMap<String, corpus::Prediction> =
        run.into_iter().map(|p| (p.id.clone(), p)).collect();
    gold.tweets
        .iter()
        .map(|t| {
            let p = by_id
                .remove(&t.id)
                .ok_or_else(|| DataError(format!("run file has no prediction for id {}", t.id)))?;
            Ok(PredictionRecord {
                id: p.id,
                misogynous: p.misogynous,
                category: p.category,
                target: p.target,
                p_misogynous: if p.misogynous { 1.0 } else { 0.0 },
                category_probabilities: None,
                p_active: None,
            })
        })
        .collect()
}

pub fn run(args: RunArgs, cfg: &FileConfig) -> Result<()> {
    let s = settings(&args.system, cfg, Task::A)?;
    let (train, words, train_sentences, lenient) = input_paths(&args.input, cfg);
    let run_cfg = RunConfig {
        train: required(train, "train")?,
        test: args.test.or(cfg.test.clone()),
        word_embeddings: words,
        train_sentence_embeddings: train_sentences,
        test_sentence_embeddings: args.test_sentence_embeddings.or(cfg.test_sentence_embeddings.clone()),
        validation_fraction: args.validation_fraction.or(cfg.validation_fraction),
        seed: args.seed.or(cfg.seed).unwrap_or(RunConfig::default().seed),
        lenient,
        scope: scope(args.scope, cfg)?,
        system: s,
    };
    if run_cfg.test.is_none() && run_cfg.validation_fraction.is_none() {
        return Err(UsageError("run needs --test or --validation-fraction".into()).into());
    }
    let inputs: RunInputs = run_cfg.load_inputs()?;
    let out = pipeline::run(&inputs, &run_cfg.system, run_cfg.scope)?;

    if let Some(p) = args.model.or(cfg.model.clone()) {
        out.system.save(&p)?;
    }
    if let Some(p) = args.probabilities.or(cfg.probabilities.clone()) {
        write_or_print(Some(&p), &probability_table(&out.predictions))?;
    }
    let output = args.output.or(cfg.output.clone());
    write_or_print(output.as_deref(), &out.run_file())?;

    let mut report = String::new();
    if let Some(a) = &out.task_a {
        write!(report, "task A\n{a}\n").unwrap();
    }
    if let Some(b) = &out.task_b {
        write!(report, "\n{b}\n").unwrap();
    }
    if !report.is_empty() {
        // keep stdout clean when it carries the run file
        if output.is_some() {
            print!("{report}");
        } else {
            eprint!("{report}");
        }
    }
    if let Some(p) = args.report.or(cfg.report.clone()) {
        write_or_print(Some(&p), &report)?;
    }
    Ok(())
}

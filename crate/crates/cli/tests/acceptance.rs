//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p ami-cli --test acceptance`. The official-data
//! checks read their inputs from environment variables and are skipped with
//! a notice when those are unset:
//!
//! - `AMI_EN_TRAIN`, `AMI_EN_TEST`: labelled English train and test TSVs
//! - `AMI_WORD_EMBEDDINGS`: 300-d word vectors
//! - `AMI_TRAIN_SENTENCES`, `AMI_TEST_SENTENCES`: 512-d sentence embeddings

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};
use std::{env, fs};

use ami_core::features::{FeatureMatrix, TfidfVocabulary};
use ami_core::models::gbdt::{weighted_log_loss, Node};
use ami_core::models::{fit_gbdt, fit_logreg, train_gbdt, EngineConfig, GbdtConfig, LogisticObjective, LrConfig};
use ami_core::pipeline::{self, RunConfig};
use ami_core::preprocess::TokenSequence;
use ami_core::{SystemSettings, Task};
use oracles::Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = std::result::Result<String, String>;

type Criterion = Box<dyn FnOnce() -> (Outcome, Option<Duration>)>;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn ami(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ami"))
        .args(args)
        .output()
        .expect("spawning ami")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn stats_counts(path: &Path) -> Check {
    let out = ami(&["stats", "--data", path_str(path)]);
    check!(
        out.status.success(),
        "stats exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    let value = |label: &str| -> Option<usize> {
        text.lines()
            .find(|l| l.split_whitespace().nth(1) == Some(label))
            .and_then(|l| l.split_whitespace().nth(2))
            .and_then(|v| v.parse().ok())
    };
    let expected = [
        ("misogynous", 1785),
        ("not_misogynous", 2215),
        ("discredit", 1014),
        ("derailing", 92),
        ("dominance", 148),
        ("sexual_harassment", 352),
        ("stereotype", 179),
        ("active", 1058),
        ("passive", 727),
    ];
    for (label, want) in expected {
        let got = value(label);
        check!(
            got == Some(want),
            "{}: {label} = {got:?}, expected {want}",
            path.display()
        );
    }
    Ok(text)
}

fn label_distribution() -> Outcome {
    if let Err(e) = stats_counts(&oracles::fixtures().join("synthetic_train.tsv")) {
        return Outcome::Fail(e);
    }
    match env::var_os("AMI_EN_TRAIN") {
        Some(p) => match stats_counts(Path::new(&p)) {
            Ok(_) => Outcome::Pass("synthetic fixture and official training file match exactly".into()),
            Err(e) => Outcome::Fail(e),
        },
        None => {
            Outcome::Pass("synthetic fixture matches exactly; official file not checked (AMI_EN_TRAIN unset)".into())
        }
    }
}

fn tfidf_oracle() -> Check {
    let docs: Vec<Vec<&str>> = vec![
        vec!["woman", "back", "kitchen"],
        vec!["woman", "hyster"],
        vec!["back", "off"],
    ];
    let seqs: Vec<TokenSequence> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| TokenSequence {
            source_id: format!("d{}", i + 1),
            tokens: d.iter().map(|t| t.to_string()).collect(),
        })
        .collect();
    let vocab = TfidfVocabulary::fit(&seqs).map_err(|e| e.to_string())?;
    let expected = oracles::tfidf(&docs);
    for (seq, want) in seqs.iter().zip(&expected) {
        let got = vocab.transform(&seq.tokens);
        check!(
            got.len() == want.len(),
            "{}: {} entries, oracle {}",
            seq.source_id,
            got.len(),
            want.len()
        );
        for (j, v) in got {
            let term = &vocab.terms()[j as usize];
            let w = want[term];
            check!((v - w).abs() <= 1e-9, "{} {term}: {v} vs oracle {w}", seq.source_id);
        }
    }
    let d2 = vocab.transform(&seqs[1].tokens);
    let at = |t: &str| {
        d2.iter()
            .find(|(j, _)| *j as usize == vocab.index_of(t).unwrap())
            .unwrap()
            .1
    };
    Ok(format!("D2 woman {:.6}, hyster {:.6}", at("woman"), at("hyster")))
}

fn random_problem(n: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = Rng::new(seed);
    let truth: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.normal()).collect()).collect();
    let y = x
        .iter()
        .map(|r| r.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + 0.5 * rng.normal() > 0.0)
        .collect();
    (x, y)
}

fn lr_correctness() -> Check {
    let (rows, y) = random_problem(60, 20, 11);
    let x = FeatureMatrix::from_dense(&rows).map_err(|e| e.to_string())?;
    let c = 0.7;
    let objective = LogisticObjective::new(&x, &y, c, true);
    let oracle = |p: &[f64]| oracles::logistic_objective(&rows, &y, c, &p[..20], p[20]);
    let mut rng = Rng::new(5);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let point: Vec<f64> = (0..21).map(|_| 0.5 * rng.normal()).collect();
        let (_, grad) = objective.value_and_gradient(&point);
        let fd = oracles::central_difference(oracle, &point, 1e-5);
        let diff = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(diff / scale);
    }
    check!(worst < 1e-5, "gradient relative error {worst:e}");

    let mut rng = Rng::new(3);
    let (mut sep, mut labels) = (Vec::new(), Vec::new());
    while sep.len() < 200 {
        let p = vec![rng.range(-3.0, 3.0), rng.range(-3.0, 3.0)];
        let s = p[0] - 0.5 * p[1] + 0.3;
        if s.abs() > 0.5 {
            labels.push(s > 0.0);
            sep.push(p);
        }
    }
    let xs = FeatureMatrix::from_dense(&sep).map_err(|e| e.to_string())?;
    let (m, trace) = fit_logreg(&xs, &labels, &LrConfig::default()).map_err(|e| e.to_string())?;
    let correct = xs
        .rows()
        .iter()
        .zip(&labels)
        .filter(|(r, &l)| m.predict(r).unwrap() == l)
        .count();
    check!(
        correct == labels.len(),
        "separable fixture: {correct}/{} correct",
        labels.len()
    );
    check!(
        trace.objective.windows(2).all(|w| w[1] <= w[0]),
        "objective increased on the separable fixture"
    );

    for seed in 0..5 {
        let (rows, y) = random_problem(120, 20, seed);
        let x = FeatureMatrix::from_dense(&rows).map_err(|e| e.to_string())?;
        for c in [0.01, 1.0, 100.0] {
            let (_, trace) = fit_logreg(
                &x,
                &y,
                &LrConfig {
                    c,
                    ..Default::default()
                },
            )
            .map_err(|e| e.to_string())?;
            check!(
                trace.objective.windows(2).all(|w| w[1] <= w[0]),
                "objective increased (seed {seed}, C {c})"
            );
        }
    }
    Ok(format!(
        "max gradient relative error {worst:.1e}, separable 200/200, 15 monotone fits"
    ))
}

fn tie_heavy_problem(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = Rng::new(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..5)
                .map(|j| {
                    if rng.uniform() < 0.3 {
                        0.0
                    } else {
                        (rng.range(-2.0, 2.0) * (j + 1) as f64).round() / 4.0
                    }
                })
                .collect()
        })
        .collect();
    let y = rows
        .iter()
        .map(|r| r[0] - r[1] + 0.5 * r[2] * r[3] + 0.3 * rng.normal() > 0.0)
        .collect();
    (rows, y)
}

fn gbdt_correctness() -> Check {
    let x = FeatureMatrix::from_dense(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).map_err(|e| e.to_string())?;
    let stump = GbdtConfig {
        scale_pos_weight: 1.0,
        n_trees: 1,
        max_depth: 1,
        min_child_hessian: 0.0,
        ..GbdtConfig::xgb_like()
    };
    let m = train_gbdt(&x, &[false, false, true, true], &stump).map_err(|e| e.to_string())?;
    let Node::Split { left, .. } = m.trees[0].nodes[0] else {
        return Err("stump root did not split".into());
    };
    let Node::Leaf { weight, .. } = m.trees[0].nodes[left] else {
        return Err("stump child is not a leaf".into());
    };
    // G = 2 * 0.5, H = 2 * 0.25, lambda = 3
    let closed = -1.0 / (0.5 + 3.0);
    check!(
        (weight - closed).abs() <= 1e-12,
        "stump leaf {weight} vs closed form {closed}"
    );
    check!(
        (weight - -0.285714).abs() < 1e-6,
        "stump leaf {weight} is not -0.285714"
    );

    let (rows, y) = tie_heavy_problem(200, 29);
    let x = FeatureMatrix::from_dense(&rows).map_err(|e| e.to_string())?;
    let cfg = GbdtConfig {
        n_trees: 50,
        ..GbdtConfig::xgb_like()
    };
    let (_, trace) = fit_gbdt(&x, &y, &cfg).map_err(|e| e.to_string())?;
    check!(trace.loss.len() == 51, "loss trace has {} entries", trace.loss.len());
    check!(
        trace.loss.windows(2).all(|w| w[1] <= w[0]),
        "training loss increased: {:?}",
        trace.loss
    );
    check!(
        trace.loss[0] == weighted_log_loss(&vec![0.0; y.len()], &y, cfg.scale_pos_weight),
        "initial loss is not the base-score loss"
    );

    let (rows, y) = tie_heavy_problem(200, 17);
    let cfg = GbdtConfig {
        n_trees: 8,
        max_depth: 3,
        ..GbdtConfig::xgb_like()
    };
    check!(
        cfg.scale_pos_weight == 0.8,
        "preset scale_pos_weight is {}",
        cfg.scale_pos_weight
    );
    let m = train_gbdt(&FeatureMatrix::from_dense(&rows).map_err(|e| e.to_string())?, &y, &cfg)
        .map_err(|e| e.to_string())?;
    oracles::audit_gbdt(&rows, &y, &m)?;
    Ok(format!(
        "stump leaf {weight:.6}, loss {:.4} -> {:.4} over 50 rounds, 8 trees audited",
        trace.loss[0], trace.loss[50]
    ))
}

fn metric_oracle() -> Check {
    use ami_core::evaluation::{accuracy, macro_f1, per_class_report};
    let mut rng = Rng::new(2018);
    for case in 0..20 {
        let k = 2 + rng.below(5);
        let n = 1 + rng.below(200);
        let classes: Vec<u32> = (0..k as u32).collect();
        let draw = |rng: &mut Rng| {
            if rng.uniform() < 0.05 {
                k as u32
            } else {
                rng.below(k) as u32
            }
        };
        let gold: Vec<u32> = (0..n).map(|_| draw(&mut rng)).collect();
        let pred: Vec<u32> = (0..n)
            .map(|i| if rng.uniform() < 0.6 { gold[i] } else { draw(&mut rng) })
            .collect();
        let acc = accuracy(&gold, &pred).map_err(|e| e.to_string())?;
        check!(acc == oracles::accuracy(&gold, &pred), "case {case}: accuracy {acc}");
        let m = macro_f1(&gold, &pred, &classes).map_err(|e| e.to_string())?;
        check!(
            m == oracles::macro_f1(&gold, &pred, &classes),
            "case {case}: macro-F1 {m}"
        );
        let report = per_class_report(&gold, &pred, &classes).map_err(|e| e.to_string())?;
        for (c, class) in classes.iter().enumerate() {
            check!(
                report[c].f1 == oracles::f1(&gold, &pred, class),
                "case {case}: class {class} F1"
            );
        }
    }
    let m = macro_f1(&["A", "A", "B", "B"], &["A", "B", "B", "B"], &["A", "B"]).map_err(|e| e.to_string())?;
    check!((m - 11.0 / 15.0).abs() <= 1e-9, "worked example gives {m}");
    check!(format!("{m:.6}") == "0.733333", "worked example prints as {m:.6}");
    Ok(format!("20 fixtures exact, worked example {m:.6}"))
}

fn determinism() -> Check {
    let fx = oracles::fixtures();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("run.toml");
    let body = format!(
        "task = \"B\"\nengine = \"cb\"\ntrain = {:?}\ntest = {:?}\nword_embeddings = {:?}\n\
         train_sentence_embeddings = {:?}\ntest_sentence_embeddings = {:?}\n\n[gbdt]\nn_trees = 30\n",
        fx.join("small_train.tsv"),
        fx.join("small_test.tsv"),
        fx.join("small_words.txt"),
        fx.join("small_train_sentences.tsv"),
        fx.join("small_test_sentences.tsv"),
    );
    fs::write(&config, body).map_err(|e| e.to_string())?;
    let run = |threads: &str, tag: &str| -> Result<(Vec<u8>, Vec<u8>), String> {
        let model = dir.path().join(format!("model-{tag}.json"));
        let output = dir.path().join(format!("run-{tag}.tsv"));
        let out = ami(&[
            "run",
            "--config",
            path_str(&config),
            "--threads",
            threads,
            "--model",
            path_str(&model),
            "--output",
            path_str(&output),
        ]);
        check!(
            out.status.success(),
            "run failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        Ok((
            fs::read(&model).map_err(|e| e.to_string())?,
            fs::read(&output).map_err(|e| e.to_string())?,
        ))
    };
    let reference = run("1", "a")?;
    check!(run("1", "b")? == reference, "two single-thread runs differ");
    check!(
        run("4", "c")? == reference,
        "4-thread run differs from single-thread run"
    );
    check!(run("4", "d")? == reference, "two 4-thread runs differ");
    Ok(format!(
        "Task B cb-like runs identical at 1 and 4 threads (model {} bytes, run file {} bytes)",
        reference.0.len(),
        reference.1.len()
    ))
}

fn official_inputs() -> Option<[PathBuf; 5]> {
    let var = |k| env::var_os(k).map(PathBuf::from);
    Some([
        var("AMI_EN_TRAIN")?,
        var("AMI_EN_TEST")?,
        var("AMI_WORD_EMBEDDINGS")?,
        var("AMI_TRAIN_SENTENCES")?,
        var("AMI_TEST_SENTENCES")?,
    ])
}

fn published_numbers() -> Outcome {
    let Some([train, test, words, train_s, test_s]) = official_inputs() else {
        return Outcome::Skip(
            "official data not available (set AMI_EN_TRAIN, AMI_EN_TEST, AMI_WORD_EMBEDDINGS, \
             AMI_TRAIN_SENTENCES, AMI_TEST_SENTENCES); covered by the property and oracle suites"
                .into(),
        );
    };
    let config = |task, engine| RunConfig {
        train: train.clone(),
        test: Some(test.clone()),
        word_embeddings: Some(words.clone()),
        train_sentence_embeddings: Some(train_s.clone()),
        test_sentence_embeddings: Some(test_s.clone()),
        system: SystemSettings {
            task,
            engine,
            ..Default::default()
        },
        ..Default::default()
    };
    let a = match pipeline::run_task_a(&config(Task::A, EngineConfig::Logreg(LrConfig::default()))) {
        Ok(out) => out.task_a.map(|s| s.accuracy),
        Err(e) => return Outcome::Fail(format!("Task A run: {e}")),
    };
    let b = match pipeline::run_task_b(&config(Task::B, EngineConfig::Gbdt(GbdtConfig::cb_like()))) {
        Ok(out) => out.task_b.map(|s| s.average),
        Err(e) => return Outcome::Fail(format!("Task B run: {e}")),
    };
    let (Some(a), Some(b)) = (a, b) else {
        return Outcome::Fail("official test file carries no labels".into());
    };
    let detail = format!("Task A accuracy {a:.4} (bracket 0.65-0.75), Task B average {b:.4} (bracket 0.30-0.45)");
    if (0.65..=0.75).contains(&a) && (0.30..=0.45).contains(&b) {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn lift(budget: Duration, f: fn() -> Check) -> impl FnOnce() -> (Outcome, Option<Duration>) {
    move || {
        let outcome = match f() {
            Ok(d) => Outcome::Pass(d),
            Err(e) => Outcome::Fail(e),
        };
        (outcome, Some(budget))
    }
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria: Vec<(&str, Criterion)> = vec![
        (
            "label distribution",
            Box::new(move || (label_distribution(), Some(secs(1)))),
        ),
        ("tf-idf oracle", Box::new(lift(secs(1), tfidf_oracle))),
        ("lr correctness", Box::new(lift(secs(5), lr_correctness))),
        ("gbdt correctness", Box::new(lift(secs(30), gbdt_correctness))),
        ("metric oracle", Box::new(lift(secs(1), metric_oracle))),
        ("determinism", Box::new(lift(secs(30), determinism))),
        (
            "published-number reproduction",
            Box::new(|| (published_numbers(), None)),
        ),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let (outcome, budget) = run();
        let elapsed = start.elapsed();
        let over = budget.filter(|b| elapsed > *b);
        let (status, detail) = match (outcome, over) {
            (Outcome::Fail(d), _) => ("FAIL", d),
            (Outcome::Pass(d), Some(b)) => ("FAIL", format!("{d}; over the {}s budget", b.as_secs())),
            (Outcome::Pass(d), None) => ("PASS", d),
            (Outcome::Skip(d), _) => ("SKIP", d),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} {name} [{:.2}s]: {detail}", elapsed.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

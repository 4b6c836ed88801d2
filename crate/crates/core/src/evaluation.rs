//! Scoring: accuracy for Task A, macro-F1 for the Task B category and
//! target decisions, and per-class diagnostics.
//!
//! A class with no predictions has precision 0, a class with no gold
//! items has recall 0, and F1 is 0 whenever `P + R = 0`.

use std::fmt::{self, Display};

use serde::{Deserialize, Serialize};

use crate::corpus::{Category, Target};
use crate::error::{Error, Result};

fn check_lengths<T>(gold: &[T], pred: &[T]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::InvalidInput(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::InvalidInput("nothing to evaluate".into()));
    }
    Ok(())
}

pub fn accuracy<T: PartialEq>(gold: &[T], pred: &[T]) -> Result<f64> {
    check_lengths(gold, pred)?;
    let hits = gold.iter().zip(pred).filter(|(g, p)| g == p).count();
    Ok(hits as f64 / gold.len() as f64)
}

/// Counts over `classes`, with one extra trailing row/column for labels
/// outside the class set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    /// `counts[gold][pred]`, `(K + 1) x (K + 1)`.
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new<T: PartialEq + Display>(gold: &[T], pred: &[T], classes: &[T]) -> Result<Self> {
        check_lengths(gold, pred)?;
        let k = classes.len();
        let slot = |v: &T| classes.iter().position(|c| c == v).unwrap_or(k);
        let mut counts = vec![vec![0; k + 1]; k + 1];
        for (g, p) in gold.iter().zip(pred) {
            counts[slot(g)][slot(p)] += 1;
        }
        Ok(ConfusionMatrix {
            labels: classes.iter().map(ToString::to_string).collect(),
            counts,
        })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn true_positives(&self, c: usize) -> usize {
        self.counts[c][c]
    }

    pub fn false_positives(&self, c: usize) -> usize {
        self.counts.iter().map(|row| row[c]).sum::<usize>() - self.counts[c][c]
    }

    pub fn false_negatives(&self, c: usize) -> usize {
        self.counts[c].iter().sum::<usize>() - self.counts[c][c]
    }

    pub fn support(&self, c: usize) -> usize {
        self.counts[c].iter().sum()
    }

    pub fn class_scores(&self) -> Vec<ClassScores> {
        (0..self.labels.len())
            .map(|c| {
                let tp = self.true_positives(c);
                let (fp, fn_) = (self.false_positives(c), self.false_negatives(c));
                let precision = ratio(tp, tp + fp);
                let recall = ratio(tp, tp + fn_);
                let f1 = f1_score(precision, recall);
                ClassScores {
                    label: self.labels[c].clone(),
                    precision,
                    recall,
                    f1,
                    support: tp + fn_,
                    predicted: tp + fp,
                    undetected: tp + fn_ > 0 && tp == 0,
                }
            })
            .collect()
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub predicted: usize,
    /// Gold items exist but none was recovered.
    pub undetected: bool,
}

pub fn per_class_report<T: PartialEq + Display>(gold: &[T], pred: &[T], classes: &[T]) -> Result<Vec<ClassScores>> {
    Ok(ConfusionMatrix::new(gold, pred, classes)?.class_scores())
}

/// Unweighted mean of per-class F1 over `classes`.
pub fn macro_f1<T: PartialEq + Display>(gold: &[T], pred: &[T], classes: &[T]) -> Result<f64> {
    if classes.is_empty() {
        return Err(Error::InvalidInput("empty class set".into()));
    }
    let scores = per_class_report(gold, pred, classes)?;
    Ok(scores.iter().map(|s| s.f1).sum::<f64>() / scores.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub evaluated: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassScores>,
}

impl ScoreReport {
    pub fn new<T: PartialEq + Display>(gold: &[T], pred: &[T], classes: &[T]) -> Result<Self> {
        let per_class = per_class_report(gold, pred, classes)?;
        Ok(ScoreReport {
            evaluated: gold.len(),
            accuracy: accuracy(gold, pred)?,
            macro_f1: per_class.iter().map(|s| s.f1).sum::<f64>() / per_class.len().max(1) as f64,
            per_class,
        })
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("label\tprecision\trecall\tf1\tsupport\tpredicted\n");
        for s in &self.per_class {
            out.push_str(&format!(
                "{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\n",
                s.label, s.precision, s.recall, s.f1, s.support, s.predicted
            ));
        }
        out.push_str(&format!("macro_f1\t\t\t{:.6}\t{}\t\n", self.macro_f1, self.evaluated));
        out.push_str(&format!("accuracy\t\t\t{:.6}\t{}\t\n", self.accuracy, self.evaluated));
        out
    }
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<20} {:>9} {:>9} {:>9} {:>8}",
            "class", "precision", "recall", "f1", "support"
        )?;
        for s in &self.per_class {
            let flag = if s.undetected { "  <- never detected" } else { "" };
            writeln!(
                f,
                "{:<20} {:>9.4} {:>9.4} {:>9.4} {:>8}{flag}",
                s.label, s.precision, s.recall, s.f1, s.support
            )?;
        }
        writeln!(f, "{:<20} {:>29.4} {:>8}", "macro avg", self.macro_f1, self.evaluated)?;
        write!(f, "{:<20} {:>29.4} {:>8}", "accuracy", self.accuracy, self.evaluated)
    }
}

/// Which tweets and classes Task B is scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskBScope {
    /// Gold-misogynous tweets only, five categories and two targets.
    #[default]
    GoldMisogynous,
    /// Every tweet, with the "no label" value as an extra class.
    AllWithNone,
}

impl std::str::FromStr for TaskBScope {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "gold-misogynous" => Ok(TaskBScope::GoldMisogynous),
            "all-with-none" => Ok(TaskBScope::AllWithNone),
            other => Err(format!(
                "unknown scope `{other}` (expected gold-misogynous or all-with-none)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskBReport {
    pub scope: TaskBScope,
    pub category: ScoreReport,
    pub target: ScoreReport,
    /// Mean of the category and target macro-F1.
    pub average: f64,
}

impl fmt::Display for TaskBReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "category\n{}\n", self.category)?;
        writeln!(f, "target\n{}\n", self.target)?;
        write!(f, "task B average macro-F1: {:.4}", self.average)
    }
}

pub fn task_b_score(
    gold: &[(Category, Target)],
    pred: &[(Category, Target)],
    scope: TaskBScope,
) -> Result<TaskBReport> {
    check_lengths(gold, pred)?;
    let keep: Vec<usize> = match scope {
        TaskBScope::GoldMisogynous => (0..gold.len()).filter(|&i| gold[i].0 != Category::None).collect(),
        TaskBScope::AllWithNone => (0..gold.len()).collect(),
    };
    if keep.is_empty() {
        return Err(Error::InvalidInput("no gold-misogynous tweets to score".into()));
    }
    let pick = |v: &[(Category, Target)]| -> (Vec<Category>, Vec<Target>) { keep.iter().map(|&i| v[i]).unzip() };
    let (gc, gt) = pick(gold);
    let (pc, pt) = pick(pred);
    let (mut categories, mut targets) = (Category::ALL.to_vec(), Target::ALL.to_vec());
    if scope == TaskBScope::AllWithNone {
        categories.insert(0, Category::None);
        targets.insert(0, Target::None);
    }
    let category = ScoreReport::new(&gc, &pc, &categories)?;
    let target = ScoreReport::new(&gt, &pt, &targets)?;
    let average = (category.macro_f1 + target.macro_f1) / 2.0;
    Ok(TaskBReport {
        scope,
        category,
        target,
        average,
    })
}

//! AMI-format corpora: TSV loading with label validation, label
//! distributions, stratified splitting and run-file output.
//!
//! Dataset files are UTF-8, tab separated, with the header
//! `id<TAB>text<TAB>misogynous<TAB>misogyny_category<TAB>target` (unlabelled files carry
//! only `id<TAB>text`). Absent category/target labels are written as `0`.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LABELED_HEADER: [&str; 5] = ["id", "text", "misogynous", "misogyny_category", "target"];

/// Misogynistic behaviour. `None` is used for non-misogynous tweets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    None,
    Stereotype,
    Dominance,
    Derailing,
    SexualHarassment,
    Discredit,
}

impl Category {
    /// The five misogynistic categories in declaration order.
    pub const ALL: [Category; 5] = [
        Category::Stereotype,
        Category::Dominance,
        Category::Derailing,
        Category::SexualHarassment,
        Category::Discredit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::None => "0",
            Category::Stereotype => "stereotype",
            Category::Dominance => "dominance",
            Category::Derailing => "derailing",
            Category::SexualHarassment => "sexual_harassment",
            Category::Discredit => "discredit",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "" | "none" => Ok(Category::None),
            "stereotype" => Ok(Category::Stereotype),
            "dominance" => Ok(Category::Dominance),
            "derailing" => Ok(Category::Derailing),
            "sexual_harassment" => Ok(Category::SexualHarassment),
            "discredit" => Ok(Category::Discredit),
            other => Err(format!("unknown misogyny category `{other}`")),
        }
    }
}

/// Target of a misogynous tweet. `None` for non-misogynous tweets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    None,
    Active,
    Passive,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::Active, Target::Passive];

    pub fn as_str(self) -> &'static str {
        match self {
            Target::None => "0",
            Target::Active => "active",
            Target::Passive => "passive",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "" | "none" => Ok(Target::None),
            "active" => Ok(Target::Active),
            "passive" => Ok(Target::Passive),
            other => Err(format!("unknown target `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledTweet {
    pub id: String,
    pub text: String,
    pub misogynous: bool,
    pub category: Category,
    pub target: Target,
}

impl LabeledTweet {
    pub fn unlabeled(id: impl Into<String>, text: impl Into<String>) -> Self {
        LabeledTweet {
            id: id.into(),
            text: text.into(),
            misogynous: false,
            category: Category::None,
            target: Target::None,
        }
    }

    /// Checks the cross-level label rule: non-misogynous tweets carry no
    /// category or target, misogynous tweets carry both.
    pub fn consistency_violation(&self) -> Option<String> {
        match (self.misogynous, self.category, self.target) {
            (false, Category::None, Target::None) => None,
            (false, c, t) => Some(format!("misogynous=0 but category={c} target={t} (both must be 0)")),
            (true, Category::None, _) | (true, _, Target::None) => Some(format!(
                "misogynous=1 but category={} target={} (both must be set)",
                self.category, self.target
            )),
            (true, _, _) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    /// Abort on the first problem.
    #[default]
    Strict,
    /// Skip unparseable rows, keep inconsistent rows, and report both.
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueKind {
    ColumnCount,
    UnknownLabel,
    DuplicateId,
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadIssue {
    pub line: usize,
    pub kind: IssueKind,
    pub message: String,
}

impl fmt::Display for LoadIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub tweets: Vec<LabeledTweet>,
    pub has_labels: bool,
}

impl Dataset {
    pub fn new(tweets: Vec<LabeledTweet>, has_labels: bool) -> Self {
        Dataset { tweets, has_labels }
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.tweets.iter().map(|t| t.id.as_str())
    }

    /// Loads a dataset file, returning the dataset together with every
    /// issue found. In strict mode the first issue is returned as an error.
    pub fn load(path: impl AsRef<Path>, labeled: bool, mode: LoadMode) -> Result<(Dataset, Vec<LoadIssue>)> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let (dataset, issues) =
            Self::parse(&content, labeled, mode).map_err(|issue| Error::parse(path, issue.line, issue.message))?;
        if dataset.is_empty() {
            return Err(Error::parse(path, 1, "dataset contains no rows"));
        }
        for issue in &issues {
            log::warn!("{}: {}", path.display(), issue);
        }
        Ok((dataset, issues))
    }

    /// Parses dataset text. On error the offending issue is returned.
    pub fn parse(
        content: &str,
        labeled: bool,
        mode: LoadMode,
    ) -> std::result::Result<(Dataset, Vec<LoadIssue>), LoadIssue> {
        let mut lines = content.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, l)) if l.trim().is_empty() => continue,
                Some((n, l)) => break (n + 1, l.trim_end_matches('\r')),
                None => {
                    return Err(LoadIssue {
                        line: 1,
                        kind: IssueKind::ColumnCount,
                        message: "missing header row".into(),
                    })
                }
            }
        };
        let header_cols: Vec<&str> = header.1.split('\t').map(str::trim).collect();
        let expected: &[&str] = if labeled { &LABELED_HEADER } else { &LABELED_HEADER[..2] };
        if header_cols.len() < expected.len() || header_cols[..expected.len()] != *expected {
            return Err(LoadIssue {
                line: header.0,
                kind: IssueKind::ColumnCount,
                message: format!("expected header `{}`", expected.join("\\t")),
            });
        }
        let width = if labeled {
            LABELED_HEADER.len()
        } else {
            header_cols.len()
        };

        let mut tweets = Vec::new();
        let mut issues = Vec::new();
        let mut seen = HashSet::new();
        for (n, raw) in lines {
            let line_no = n + 1;
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let mut report = |kind: IssueKind, message: String| -> std::result::Result<(), LoadIssue> {
                let issue = LoadIssue {
                    line: line_no,
                    kind,
                    message,
                };
                match mode {
                    LoadMode::Strict => Err(issue),
                    LoadMode::Lenient => {
                        issues.push(issue);
                        Ok(())
                    }
                }
            };

            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != width {
                report(
                    IssueKind::ColumnCount,
                    format!("expected {width} columns, found {}", cols.len()),
                )?;
                continue;
            }
            let mut tweet = LabeledTweet::unlabeled(cols[0].trim(), cols[1]);
            if labeled {
                let parsed = parse_misogynous(cols[2])
                    .and_then(|m| Ok((m, cols[3].parse::<Category>()?, cols[4].parse::<Target>()?)));
                match parsed {
                    Ok((m, c, t)) => {
                        tweet.misogynous = m;
                        tweet.category = c;
                        tweet.target = t;
                    }
                    Err(message) => {
                        report(IssueKind::UnknownLabel, message)?;
                        continue;
                    }
                }
            }
            if !seen.insert(tweet.id.clone()) {
                report(IssueKind::DuplicateId, format!("duplicate id `{}`", tweet.id))?;
                continue;
            }
            if labeled {
                if let Some(message) = tweet.consistency_violation() {
                    // inconsistent gold rows are kept in lenient mode
                    report(IssueKind::Inconsistent, message)?;
                }
            }
            tweets.push(tweet);
        }
        Ok((Dataset::new(tweets, labeled), issues))
    }

    /// Writes the dataset in the same TSV format `load` reads.
    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        if self.has_labels {
            out.push_str(&LABELED_HEADER.join("\t"));
        } else {
            out.push_str("id\ttext");
        }
        out.push('\n');
        for t in &self.tweets {
            if self.has_labels {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    t.id,
                    t.text,
                    u8::from(t.misogynous),
                    t.category,
                    t.target
                ));
            } else {
                out.push_str(&format!("{}\t{}\n", t.id, t.text));
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Keeps only the tweets for which `keep` returns true.
    pub fn filtered(&self, keep: impl Fn(&LabeledTweet) -> bool) -> Dataset {
        Dataset::new(
            self.tweets.iter().filter(|t| keep(t)).cloned().collect(),
            self.has_labels,
        )
    }
}

fn parse_misogynous(s: &str) -> std::result::Result<bool, String> {
    match s.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(format!("misogynous must be 0 or 1, found `{other}`")),
    }
}

/// Label counts at the three annotation levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistributionReport {
    pub total: usize,
    pub misogynous: usize,
    pub not_misogynous: usize,
    /// Counts in `Category::ALL` order.
    pub categories: Vec<(Category, usize)>,
    /// Counts in `Target::ALL` order.
    pub targets: Vec<(Target, usize)>,
}

impl DistributionReport {
    pub fn category(&self, c: Category) -> usize {
        self.categories.iter().find(|(k, _)| *k == c).map_or(0, |(_, n)| *n)
    }

    pub fn target(&self, t: Target) -> usize {
        self.targets.iter().find(|(k, _)| *k == t).map_or(0, |(_, n)| *n)
    }

    /// Aligned text table, one row per label value.
    pub fn to_table(&self) -> String {
        let mut rows = vec![
            ("Misogyny", "misogynous".to_string(), self.misogynous),
            ("Misogyny", "not_misogynous".to_string(), self.not_misogynous),
        ];
        rows.extend(self.categories.iter().map(|(c, n)| ("Category", c.to_string(), *n)));
        rows.extend(self.targets.iter().map(|(t, n)| ("Target", t.to_string(), *n)));
        let mut out = format!("{:<10} {:<18} {:>7}\n", "level", "label", "count");
        for (level, label, n) in rows {
            out.push_str(&format!("{level:<10} {label:<18} {n:>7}\n"));
        }
        out.push_str(&format!("{:<10} {:<18} {:>7}\n", "total", "", self.total));
        out
    }
}

pub fn label_distribution(d: &Dataset) -> Result<DistributionReport> {
    if !d.has_labels {
        return Err(Error::Unlabeled);
    }
    let misogynous = d.tweets.iter().filter(|t| t.misogynous).count();
    let categories = Category::ALL
        .iter()
        .map(|&c| (c, d.tweets.iter().filter(|t| t.category == c).count()))
        .collect();
    let targets = Target::ALL
        .iter()
        .map(|&t| (t, d.tweets.iter().filter(|x| x.target == t).count()))
        .collect();
    Ok(DistributionReport {
        total: d.len(),
        misogynous,
        not_misogynous: d.len() - misogynous,
        categories,
        targets,
    })
}

/// Stratified (on the misogyny label) deterministic split.
///
/// The training side receives `round(fraction * n)` tweets; per-stratum
/// shares are floored and the remainder is handed out by largest
/// fractional part, so every stratum is within one tweet of its exact
/// share. Each side keeps the source order.
pub fn split(d: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !d.has_labels {
        return Err(Error::Unlabeled);
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let strata: Vec<Vec<usize>> = [false, true]
        .iter()
        .map(|&label| (0..d.len()).filter(|&i| d.tweets[i].misogynous == label).collect())
        .collect();

    let total_train = (train_fraction * d.len() as f64).round() as usize;
    let exact: Vec<f64> = strata.iter().map(|s| train_fraction * s.len() as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..strata.len()).collect();
    // largest remainder first; stable sort keeps stratum order on ties
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut remaining = total_train.saturating_sub(quota.iter().sum());
    for &s in order.iter().cycle().take(order.len() * 2) {
        if remaining == 0 {
            break;
        }
        if quota[s] < strata[s].len() {
            quota[s] += 1;
            remaining -= 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; d.len()];
    for (stratum, &q) in strata.iter().zip(&quota) {
        let mut shuffled = stratum.clone();
        shuffled.shuffle(&mut rng);
        for &i in &shuffled[..q] {
            in_train[i] = true;
        }
    }
    let (mut train, mut held_out) = (Vec::new(), Vec::new());
    for (tweet, &t) in d.tweets.iter().zip(&in_train) {
        if t {
            train.push(tweet.clone());
        } else {
            held_out.push(tweet.clone());
        }
    }
    if train.is_empty() || held_out.is_empty() {
        return Err(Error::InvalidInput(format!(
            "train fraction {train_fraction} leaves one side of the split empty"
        )));
    }
    Ok((Dataset::new(train, true), Dataset::new(held_out, true)))
}

/// One line of a run file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub misogynous: bool,
    pub category: Category,
    pub target: Target,
}

impl Prediction {
    pub fn not_misogynous(id: impl Into<String>) -> Self {
        Prediction {
            id: id.into(),
            misogynous: false,
            category: Category::None,
            target: Target::None,
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.id,
            u8::from(self.misogynous),
            self.category,
            self.target
        )
    }
}

pub fn render_run_file(predictions: &[Prediction]) -> String {
    let mut out = String::new();
    for p in predictions {
        out.push_str(&p.to_line());
        out.push('\n');
    }
    out
}

/// Writes `id<TAB>misogynous<TAB>category<TAB>target` lines, no header.
pub fn write_run_file(path: impl AsRef<Path>, predictions: &[Prediction]) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(render_run_file(predictions).as_bytes())
        .map_err(|e| Error::io(path, e))
}

pub fn load_run_file(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in content.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::parse(
                path,
                n + 1,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        }
        let misogynous = parse_misogynous(cols[1]).map_err(|m| Error::parse(path, n + 1, m))?;
        let category = cols[2].parse().map_err(|m: String| Error::parse(path, n + 1, m))?;
        let target = cols[3].parse().map_err(|m: String| Error::parse(path, n + 1, m))?;
        out.push(Prediction {
            id: cols[0].to_string(),
            misogynous,
            category,
            target,
        });
    }
    Ok(out)
}

//! Tweet normalisation.
//!
//! Stages run in a fixed order: URL removal, lowercasing, contraction
//! expansion, emoji/punctuation stripping, whitespace tokenisation,
//! stopword removal and Porter stemming. Each stage is exposed on its own
//! and every stage is a total function of its input.

pub mod porter;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::error::{Error, Result};

pub use porter::stem as stem_word;

const DEFAULT_CONTRACTIONS: &str = include_str!("../../data/contractions_en.tsv");
const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");
const DEFAULT_EMOJI_RANGES: &str = include_str!("../../data/emoji_ranges.txt");

/// Per-stage switches; all on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageToggles {
    pub remove_urls: bool,
    pub lowercase: bool,
    pub expand_contractions: bool,
    pub strip_emoji_and_punct: bool,
    pub remove_stopwords: bool,
    pub stem: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            remove_urls: true,
            lowercase: true,
            expand_contractions: true,
            strip_emoji_and_punct: true,
            remove_stopwords: true,
            stem: true,
        }
    }
}

/// Inclusive codepoint interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodepointRange {
    pub start: u32,
    pub end: u32,
}

#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    contractions: Vec<(String, String)>,
    stopwords: HashSet<String>,
    emoji_ranges: Vec<CodepointRange>,
    pub stages: StageToggles,
}

impl Default for PreprocessConfig {
    /// The bundled English tables.
    fn default() -> Self {
        let contractions = parse_contractions(DEFAULT_CONTRACTIONS).expect("bundled contraction table");
        let stopwords = parse_stopwords(DEFAULT_STOPWORDS).expect("bundled stopword list");
        let emoji_ranges = parse_emoji_ranges(DEFAULT_EMOJI_RANGES).expect("bundled emoji ranges");
        PreprocessConfig::new(contractions, stopwords, emoji_ranges).expect("bundled tables are valid")
    }
}

impl PreprocessConfig {
    pub fn new(
        contractions: BTreeMap<String, String>,
        stopwords: HashSet<String>,
        mut emoji_ranges: Vec<CodepointRange>,
    ) -> Result<Self> {
        if let Some(key) = contractions.keys().find(|k| k.to_lowercase() != **k || k.is_empty()) {
            return Err(Error::InvalidInput(format!(
                "contraction key `{key}` must be non-empty lowercase"
            )));
        }
        if stopwords.is_empty() {
            return Err(Error::InvalidInput("stopword list is empty".into()));
        }
        emoji_ranges.sort_by_key(|r| r.start);
        for w in emoji_ranges.windows(2) {
            if w[1].start <= w[0].end {
                return Err(Error::InvalidInput(format!(
                    "emoji ranges {:X}-{:X} and {:X}-{:X} overlap",
                    w[0].start, w[0].end, w[1].start, w[1].end
                )));
            }
        }
        if let Some(r) = emoji_ranges.iter().find(|r| r.start > r.end) {
            return Err(Error::InvalidInput(format!(
                "empty emoji range {:X}-{:X}",
                r.start, r.end
            )));
        }
        let mut contractions: Vec<(String, String)> = contractions.into_iter().collect();
        // longest key first, then lexicographic
        contractions.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(PreprocessConfig {
            contractions,
            stopwords,
            emoji_ranges,
            stages: StageToggles::default(),
        })
    }

    /// Loads the three table files (contractions TSV, stopwords one per
    /// line, emoji ranges as `START-END` hex per line).
    pub fn from_files(contractions: &Path, stopwords: &Path, emoji_ranges: &Path) -> Result<Self> {
        let read = |p: &Path| fs::read_to_string(p).map_err(|e| Error::io(p, e));
        fn at(p: &Path) -> impl Fn((usize, String)) -> Error + '_ {
            move |(line, msg)| Error::parse(p, line, msg)
        }
        PreprocessConfig::new(
            parse_contractions(&read(contractions)?).map_err(at(contractions))?,
            parse_stopwords(&read(stopwords)?).map_err(at(stopwords))?,
            parse_emoji_ranges(&read(emoji_ranges)?).map_err(at(emoji_ranges))?,
        )
    }

    pub fn stopwords(&self) -> &HashSet<String> {
        &self.stopwords
    }

    pub fn emoji_ranges(&self) -> &[CodepointRange] {
        &self.emoji_ranges
    }

    pub fn contractions(&self) -> &[(String, String)] {
        &self.contractions
    }

    pub fn is_emoji(&self, c: char) -> bool {
        let cp = c as u32;
        let i = self.emoji_ranges.partition_point(|r| r.end < cp);
        self.emoji_ranges.get(i).is_some_and(|r| r.start <= cp)
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

type TableResult<T> = std::result::Result<T, (usize, String)>;

pub fn parse_contractions(text: &str) -> TableResult<BTreeMap<String, String>> {
    let mut table = BTreeMap::new();
    for (n, line) in content_lines(text) {
        let (key, value) = line
            .split_once('\t')
            .ok_or_else(|| (n, "expected `contraction<TAB>expansion`".to_string()))?;
        table.insert(key.to_string(), value.trim().to_string());
    }
    Ok(table)
}

pub fn parse_stopwords(text: &str) -> TableResult<HashSet<String>> {
    Ok(content_lines(text).map(|(_, l)| l.trim().to_string()).collect())
}

pub fn parse_emoji_ranges(text: &str) -> TableResult<Vec<CodepointRange>> {
    content_lines(text)
        .map(|(n, line)| {
            let interval = line.split_whitespace().next().unwrap_or_default();
            let (a, b) = interval.split_once('-').unwrap_or((interval, interval));
            let hex = |s: &str| u32::from_str_radix(s, 16).map_err(|e| (n, format!("bad hex `{s}`: {e}")));
            Ok(CodepointRange {
                start: hex(a)?,
                end: hex(b)?,
            })
        })
        .collect()
}

/// Ordered stemmed tokens of one tweet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub source_id: String,
    pub tokens: Vec<String>,
}

/// Replaces every `http://`, `https://` or `www.` run (up to the next
/// whitespace) by a single space.
pub fn remove_urls(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while !rest.is_empty() {
        let start = ["http://", "https://", "www."]
            .iter()
            .filter_map(|p| find_ascii_ci(rest, p))
            .min();
        match start {
            Some(i) => {
                out.push_str(&rest[..i]);
                out.push(' ');
                let tail = &rest[i..];
                let end = tail.find(char::is_whitespace).unwrap_or(tail.len());
                rest = &tail[end..];
            }
            None => {
                out.push_str(rest);
                break;
            }
        }
    }
    out
}

fn find_ascii_ci(haystack: &str, needle: &str) -> Option<usize> {
    let h = haystack.as_bytes();
    let n = needle.as_bytes();
    (0..h.len().saturating_sub(n.len() - 1)).find(|&i| h[i..i + n.len()].eq_ignore_ascii_case(n))
}

/// Simple (one-to-one) lowercase mapping per codepoint.
pub fn lowercase(text: &str) -> String {
    text.chars().map(|c| c.to_lowercase().next().unwrap_or(c)).collect()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '\u{2019}'
}

/// Replaces whole-word occurrences of table keys, trying longer keys first.
/// A key only matches when it is not preceded or followed by a letter,
/// digit or apostrophe.
pub fn expand_contractions(text: &str, table: &[(String, String)]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    let mut prev: Option<char> = None;
    'outer: while i < text.len() {
        let rest = &text[i..];
        if !prev.is_some_and(is_word_char) {
            for (key, value) in table {
                if rest.starts_with(key.as_str()) && !rest[key.len()..].chars().next().is_some_and(is_word_char) {
                    out.push_str(value);
                    i += key.len();
                    prev = key.chars().last();
                    continue 'outer;
                }
            }
        }
        let c = rest.chars().next().expect("non-empty");
        out.push(c);
        prev = Some(c);
        i += c.len_utf8();
    }
    out
}

/// Deletes emoji codepoints and turns punctuation and symbols into spaces.
pub fn strip_emoji_and_punct(text: &str, config: &PreprocessConfig) -> String {
    text.chars()
        .filter(|&c| !config.is_emoji(c))
        .map(|c| if is_punct_or_symbol(c) { ' ' } else { c })
        .collect()
}

pub fn is_punct_or_symbol(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
            | MathSymbol
            | CurrencySymbol
            | ModifierSymbol
            | OtherSymbol
            | Control
    )
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

pub fn remove_stopwords(tokens: Vec<String>, stopwords: &HashSet<String>) -> Vec<String> {
    tokens.into_iter().filter(|t| !stopwords.contains(t)).collect()
}

pub fn stem(tokens: Vec<String>) -> Vec<String> {
    tokens.into_iter().map(|t| porter::stem(&t)).collect()
}

/// Runs the whole pipeline on one tweet.
pub fn preprocess(id: &str, text: &str, config: &PreprocessConfig) -> TokenSequence {
    let stages = config.stages;
    let mut t = text.to_string();
    if stages.remove_urls {
        t = remove_urls(&t);
    }
    if stages.lowercase {
        t = lowercase(&t);
    }
    if stages.expand_contractions {
        t = expand_contractions(&t, &config.contractions);
    }
    if stages.strip_emoji_and_punct {
        t = strip_emoji_and_punct(&t, config);
    }
    let mut tokens = tokenize(&t);
    if stages.remove_stopwords {
        tokens = remove_stopwords(tokens, &config.stopwords);
    }
    if stages.stem {
        tokens = stem(tokens);
    }
    TokenSequence {
        source_id: id.to_string(),
        tokens,
    }
}

/// Preprocessed text, tokens joined by single spaces (the input handed to
/// the external sentence encoder).
pub fn preprocessed_text(text: &str, config: &PreprocessConfig) -> String {
    preprocess("", text, config).tokens.join(" ")
}

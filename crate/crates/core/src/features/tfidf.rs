use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::TokenSequence;

/// Document-frequency cutoffs applied when fitting. Defaults keep every term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TfidfOptions {
    /// Minimum number of documents a term must appear in.
    pub min_df: usize,
    /// Maximum fraction of documents a term may appear in.
    pub max_df: f64,
}

impl Default for TfidfOptions {
    fn default() -> Self {
        TfidfOptions { min_df: 1, max_df: 1.0 }
    }
}

/// Unigram vocabulary with smoothed inverse document frequencies.
///
/// Terms are indexed in lexicographic order and
/// `idf(t) = ln((1 + n) / (1 + df(t))) + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyData", into = "VocabularyData")]
pub struct TfidfVocabulary {
    terms: Vec<String>,
    idf: Vec<f64>,
    n_docs: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyData {
    n_docs: usize,
    terms: Vec<String>,
    idf: Vec<f64>,
}

impl From<VocabularyData> for TfidfVocabulary {
    fn from(d: VocabularyData) -> Self {
        TfidfVocabulary::from_parts(d.terms, d.idf, d.n_docs)
    }
}

impl From<TfidfVocabulary> for VocabularyData {
    fn from(v: TfidfVocabulary) -> Self {
        VocabularyData {
            n_docs: v.n_docs,
            terms: v.terms,
            idf: v.idf,
        }
    }
}

impl TfidfVocabulary {
    fn from_parts(terms: Vec<String>, idf: Vec<f64>, n_docs: usize) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        TfidfVocabulary {
            terms,
            idf,
            n_docs,
            index,
        }
    }

    pub fn fit(corpus: &[TokenSequence]) -> Result<Self> {
        Self::fit_with(corpus, TfidfOptions::default())
    }

    pub fn fit_with(corpus: &[TokenSequence], options: TfidfOptions) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::InvalidInput("cannot fit TF-IDF on an empty corpus".into()));
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in corpus {
            let mut seen: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        let n = corpus.len();
        let max_docs = options.max_df * n as f64;
        let (terms, idf) = df
            .into_iter()
            .filter(|&(_, d)| d >= options.min_df && d as f64 <= max_docs)
            .map(|(t, d)| (t.to_string(), ((1 + n) as f64 / (1 + d) as f64).ln() + 1.0))
            .unzip();
        Ok(Self::from_parts(terms, idf, n))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.index_of(term).map(|i| self.idf[i])
    }

    pub fn idf_values(&self) -> &[f64] {
        &self.idf
    }

    /// Raw counts times idf, L2-normalised; sorted by column, zeros omitted.
    /// Out-of-vocabulary tokens are ignored.
    pub fn transform(&self, tokens: &[String]) -> Vec<(u32, f64)> {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for t in tokens {
            if let Some(i) = self.index_of(t) {
                *counts.entry(i).or_default() += 1;
            }
        }
        let mut entries: Vec<(u32, f64)> = counts
            .into_iter()
            .map(|(i, c)| (i as u32, c as f64 * self.idf[i]))
            .collect();
        let norm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, v) in &mut entries {
                *v /= norm;
            }
        }
        entries
    }
}

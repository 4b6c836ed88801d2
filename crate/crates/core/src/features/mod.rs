//! Feature vectors: a sparse TF-IDF block, the averaged word-vector block
//! and the sentence-embedding block, concatenated in that order.

pub mod embeddings;
pub mod tfidf;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::preprocess::TokenSequence;

pub use embeddings::{bowv, SentenceEmbeddingStore, WordEmbeddingTable, SENTENCE_DIM, WORD_DIM};
pub use tfidf::{TfidfOptions, TfidfVocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Tfidf,
    Bowv,
    Sentence,
}

impl BlockKind {
    pub fn name(self) -> &'static str {
        match self {
            BlockKind::Tfidf => "tfidf",
            BlockKind::Bowv => "bowv",
            BlockKind::Sentence => "sentence",
        }
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which blocks go into the vector. The order in the vector is always
/// TF-IDF, then BoWV, then sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnabledBlocks {
    pub tfidf: bool,
    pub bowv: bool,
    pub sentence: bool,
}

impl Default for EnabledBlocks {
    fn default() -> Self {
        EnabledBlocks {
            tfidf: true,
            bowv: true,
            sentence: true,
        }
    }
}

impl EnabledBlocks {
    pub fn only(kind: BlockKind) -> Self {
        EnabledBlocks {
            tfidf: kind == BlockKind::Tfidf,
            bowv: kind == BlockKind::Bowv,
            sentence: kind == BlockKind::Sentence,
        }
    }

    pub fn kinds(&self) -> Vec<BlockKind> {
        [
            (self.tfidf, BlockKind::Tfidf),
            (self.bowv, BlockKind::Bowv),
            (self.sentence, BlockKind::Sentence),
        ]
        .into_iter()
        .filter_map(|(on, k)| on.then_some(k))
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub kind: BlockKind,
    pub offset: usize,
    pub len: usize,
}

/// Block placement plus a fingerprint binding models to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub blocks: Vec<BlockSpec>,
    pub fingerprint: String,
}

impl Layout {
    /// Lays out `(kind, len)` blocks contiguously. The fingerprint covers the
    /// block list and, when given, the TF-IDF vocabulary terms and idf bits.
    pub fn new(blocks: &[(BlockKind, usize)], vocab: Option<&TfidfVocabulary>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("a layout needs at least one block".into()));
        }
        let mut specs = Vec::with_capacity(blocks.len());
        let mut offset = 0;
        let mut hasher = Sha256::new();
        hasher.update(b"ami-layout-v1\n");
        for &(kind, len) in blocks {
            if specs.iter().any(|s: &BlockSpec| s.kind == kind) {
                return Err(Error::InvalidInput(format!("block `{kind}` appears twice")));
            }
            hasher.update(format!("{kind}:{offset}:{len}\n").as_bytes());
            specs.push(BlockSpec { kind, offset, len });
            offset += len;
        }
        if let Some(v) = vocab {
            for (t, idf) in v.terms().iter().zip(v.idf_values()) {
                hasher.update(t.as_bytes());
                hasher.update(b"\t");
                hasher.update(idf.to_bits().to_le_bytes());
                hasher.update(b"\n");
            }
        }
        let digest = hasher.finalize();
        Ok(Layout {
            blocks: specs,
            fingerprint: hex::encode(&digest[..16]),
        })
    }

    pub fn len(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.offset + b.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block(&self, kind: BlockKind) -> Option<&BlockSpec> {
        self.blocks.iter().find(|b| b.kind == kind)
    }

    /// Name of the block holding column `j` and the column within it.
    pub fn locate(&self, j: usize) -> Option<(BlockKind, usize)> {
        self.blocks
            .iter()
            .find(|b| j >= b.offset && j < b.offset + b.len)
            .map(|b| (b.kind, j - b.offset))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockValues {
    /// `(column within block, value)`, strictly increasing columns, no zeros.
    Sparse(Vec<(u32, f64)>),
    Dense(Vec<f64>),
}

/// One tweet's concatenated features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    layout: Arc<Layout>,
    blocks: Vec<BlockValues>,
}

impl FeatureVector {
    pub fn new(layout: Arc<Layout>, blocks: Vec<BlockValues>) -> Result<Self> {
        if blocks.len() != layout.blocks.len() {
            return Err(Error::InvalidInput(format!(
                "layout has {} blocks, got {}",
                layout.blocks.len(),
                blocks.len()
            )));
        }
        for (spec, values) in layout.blocks.iter().zip(&blocks) {
            match values {
                BlockValues::Dense(v) if v.len() != spec.len => {
                    return Err(Error::Dimension {
                        expected: spec.len,
                        found: v.len(),
                        context: format!("{} block", spec.kind),
                    })
                }
                BlockValues::Sparse(entries) => {
                    let ordered = entries.windows(2).all(|w| w[0].0 < w[1].0);
                    let in_range = entries.last().is_none_or(|&(i, _)| (i as usize) < spec.len);
                    if !ordered || !in_range {
                        return Err(Error::InvalidInput(format!(
                            "{} block entries must be strictly increasing and below {}",
                            spec.kind, spec.len
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(FeatureVector { layout, blocks })
    }

    /// A single dense block under a fresh layout; handy for tests and toy data.
    pub fn dense(values: Vec<f64>) -> Self {
        let layout = Arc::new(Layout::new(&[(BlockKind::Sentence, values.len())], None).expect("one block"));
        FeatureVector {
            layout,
            blocks: vec![BlockValues::Dense(values)],
        }
    }

    pub fn with_layout(layout: &Arc<Layout>, dense: Vec<f64>) -> Result<Self> {
        let mut blocks = Vec::new();
        for spec in &layout.blocks {
            let slice = dense
                .get(spec.offset..spec.offset + spec.len)
                .ok_or_else(|| Error::Dimension {
                    expected: layout.len(),
                    found: dense.len(),
                    context: "dense feature vector".into(),
                })?;
            blocks.push(match spec.kind {
                BlockKind::Tfidf => BlockValues::Sparse(
                    slice
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| **v != 0.0)
                        .map(|(i, v)| (i as u32, *v))
                        .collect(),
                ),
                _ => BlockValues::Dense(slice.to_vec()),
            });
        }
        FeatureVector::new(layout.clone(), blocks)
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn fingerprint(&self) -> &str {
        &self.layout.fingerprint
    }

    pub fn len(&self) -> usize {
        self.layout.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block_values(&self) -> &[BlockValues] {
        &self.blocks
    }

    pub fn block(&self, kind: BlockKind) -> Option<&BlockValues> {
        let i = self.layout.blocks.iter().position(|b| b.kind == kind)?;
        Some(&self.blocks[i])
    }

    pub fn get(&self, j: usize) -> f64 {
        for (spec, values) in self.layout.blocks.iter().zip(&self.blocks) {
            if j < spec.offset || j >= spec.offset + spec.len {
                continue;
            }
            let local = j - spec.offset;
            return match values {
                BlockValues::Dense(v) => v[local],
                BlockValues::Sparse(e) => e
                    .binary_search_by_key(&(local as u32), |&(i, _)| i)
                    .map_or(0.0, |k| e[k].1),
            };
        }
        0.0
    }

    /// Calls `f(column, value)` for every stored entry, in column order.
    /// Dense blocks report every column, sparse blocks only non-zeros.
    pub fn for_each(&self, mut f: impl FnMut(usize, f64)) {
        for (spec, values) in self.layout.blocks.iter().zip(&self.blocks) {
            match values {
                BlockValues::Dense(v) => v.iter().enumerate().for_each(|(i, &x)| f(spec.offset + i, x)),
                BlockValues::Sparse(e) => e.iter().for_each(|&(i, x)| f(spec.offset + i as usize, x)),
            }
        }
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        let mut s = 0.0;
        self.for_each(|j, x| s += weights[j] * x);
        s
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.for_each(|j, x| out[j] = x);
        out
    }
}

/// Rows sharing one layout, with every value checked finite.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    layout: Arc<Layout>,
    rows: Vec<FeatureVector>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<FeatureVector>) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::InvalidInput("feature matrix needs at least one row".into()))?;
        let layout = first.layout.clone();
        for (r, row) in rows.iter().enumerate() {
            if row.layout.fingerprint != layout.fingerprint || row.layout.blocks != layout.blocks {
                return Err(Error::LayoutMismatch {
                    expected: layout.fingerprint.clone(),
                    found: row.layout.fingerprint.clone(),
                });
            }
            let mut bad = None;
            row.for_each(|j, x| {
                if bad.is_none() && !x.is_finite() {
                    bad = Some(j);
                }
            });
            if let Some(column) = bad {
                return Err(Error::NonFinite { row: r, column });
            }
        }
        Ok(FeatureMatrix { layout, rows })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let layout = Arc::new(Layout::new(&[(BlockKind::Sentence, n_cols)], None)?);
        let rows = rows
            .iter()
            .map(|r| FeatureVector::with_layout(&layout, r.clone()))
            .collect::<Result<Vec<_>>>()?;
        FeatureMatrix::new(rows)
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn fingerprint(&self) -> &str {
        &self.layout.fingerprint
    }

    pub fn rows(&self) -> &[FeatureVector] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.layout.len()
    }

    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            layout: self.layout.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

/// Fitted feature extractor: TF-IDF vocabulary plus the layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    pub blocks: EnabledBlocks,
    pub vocabulary: Option<TfidfVocabulary>,
    pub word_dim: usize,
    pub sentence_dim: usize,
    #[serde(skip)]
    layout: Option<Arc<Layout>>,
}

impl Featurizer {
    /// Fits the TF-IDF block (when enabled) on training tokens only.
    pub fn fit(
        train: &[TokenSequence],
        blocks: EnabledBlocks,
        options: TfidfOptions,
        word_dim: usize,
        sentence_dim: usize,
    ) -> Result<Self> {
        let vocabulary = if blocks.tfidf {
            Some(TfidfVocabulary::fit_with(train, options)?)
        } else {
            None
        };
        let mut f = Featurizer {
            blocks,
            vocabulary,
            word_dim,
            sentence_dim,
            layout: None,
        };
        f.layout = Some(Arc::new(f.build_layout()?));
        Ok(f)
    }

    fn build_layout(&self) -> Result<Layout> {
        let blocks: Vec<(BlockKind, usize)> = self
            .blocks
            .kinds()
            .into_iter()
            .map(|k| match k {
                BlockKind::Tfidf => (k, self.vocabulary.as_ref().map_or(0, TfidfVocabulary::len)),
                BlockKind::Bowv => (k, self.word_dim),
                BlockKind::Sentence => (k, self.sentence_dim),
            })
            .collect();
        Layout::new(&blocks, self.vocabulary.as_ref())
    }

    pub fn layout(&self) -> Result<Arc<Layout>> {
        match &self.layout {
            Some(l) => Ok(l.clone()),
            None => Ok(Arc::new(self.build_layout()?)),
        }
    }

    pub fn featurize(
        &self,
        tokens: &TokenSequence,
        words: Option<&WordEmbeddingTable>,
        sentences: Option<&SentenceEmbeddingStore>,
    ) -> Result<FeatureVector> {
        featurize(
            tokens,
            &tokens.source_id,
            self.vocabulary.as_ref(),
            words,
            sentences,
            &self.layout()?,
        )
    }

    /// Featurizes every sequence in parallel; output order follows input.
    pub fn featurize_all(
        &self,
        seqs: &[TokenSequence],
        words: Option<&WordEmbeddingTable>,
        sentences: Option<&SentenceEmbeddingStore>,
    ) -> Result<FeatureMatrix> {
        let layout = self.layout()?;
        let rows = seqs
            .par_iter()
            .map(|s| featurize(s, &s.source_id, self.vocabulary.as_ref(), words, sentences, &layout))
            .collect::<Result<Vec<_>>>()?;
        FeatureMatrix::new(rows)
    }
}

/// Builds the enabled blocks of `layout` for one tweet.
pub fn featurize(
    tokens: &TokenSequence,
    tweet_id: &str,
    vocab: Option<&TfidfVocabulary>,
    words: Option<&WordEmbeddingTable>,
    sentences: Option<&SentenceEmbeddingStore>,
    layout: &Arc<Layout>,
) -> Result<FeatureVector> {
    let missing = |what: &str| Error::InvalidInput(format!("{what} block enabled but no {what} source given"));
    let mut blocks = Vec::with_capacity(layout.blocks.len());
    for spec in &layout.blocks {
        blocks.push(match spec.kind {
            BlockKind::Tfidf => BlockValues::Sparse(vocab.ok_or_else(|| missing("tfidf"))?.transform(&tokens.tokens)),
            BlockKind::Bowv => BlockValues::Dense(bowv(words.ok_or_else(|| missing("bowv"))?, &tokens.tokens)),
            BlockKind::Sentence => {
                let store = sentences.ok_or_else(|| missing("sentence"))?;
                BlockValues::Dense(store.require(tweet_id)?.to_vec())
            }
        });
    }
    FeatureVector::new(layout.clone(), blocks)
}

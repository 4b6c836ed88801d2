//! Pretrained vector files: GloVe-style word embeddings and the
//! sentence-embedding TSV exchanged with the external encoder.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const WORD_DIM: usize = 300;
pub const SENTENCE_DIM: usize = 512;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EmbeddingLoadStats {
    pub loaded: usize,
    pub skipped: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordEmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl WordEmbeddingTable {
    pub fn new(dim: usize) -> Self {
        WordEmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<Option<Vec<f64>>> {
        if vector.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: vector.len(),
                context: "word vector".into(),
            });
        }
        Ok(self.vectors.insert(word.into(), vector))
    }

    /// Reads `word v1 ... vD` lines. With `lenient`, malformed lines are
    /// skipped and counted; otherwise the first one is an error. Later
    /// duplicates replace earlier ones.
    pub fn load(path: impl AsRef<Path>, dim: usize, lenient: bool) -> Result<(Self, EmbeddingLoadStats)> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut table = WordEmbeddingTable::new(dim);
        let mut stats = EmbeddingLoadStats::default();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let word = parts.next().unwrap_or_default();
            let parsed: std::result::Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            let problem = match parsed {
                Ok(v) if v.len() == dim => {
                    if table.vectors.insert(word.to_string(), v).is_some() {
                        stats.duplicates += 1;
                        log::warn!(
                            "{}:{}: duplicate word `{word}`, keeping the later vector",
                            path.display(),
                            n + 1
                        );
                    }
                    stats.loaded += 1;
                    continue;
                }
                Ok(v) => Error::Dimension {
                    expected: dim,
                    found: v.len(),
                    context: format!("{}:{}", path.display(), n + 1),
                },
                Err(e) => Error::parse(path, n + 1, format!("bad number: {e}")),
            };
            if !lenient {
                return Err(problem);
            }
            stats.skipped += 1;
        }
        if stats.skipped > 0 {
            log::warn!("{}: skipped {} malformed lines", path.display(), stats.skipped);
        }
        Ok((table, stats))
    }

    /// Component-wise mean over the tokens present in the table; the zero
    /// vector when none is.
    pub fn average(&self, tokens: &[String]) -> Vec<f64> {
        let mut sum = vec![0.0; self.dim];
        let mut n = 0usize;
        for v in tokens.iter().filter_map(|t| self.get(t)) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            n += 1;
        }
        if n > 0 {
            let n = n as f64;
            sum.iter_mut().for_each(|s| *s /= n);
        }
        sum
    }
}

/// Averaged word vectors of a tweet.
pub fn bowv(table: &WordEmbeddingTable, tokens: &[String]) -> Vec<f64> {
    table.average(tokens)
}

/// Sentence vectors keyed by tweet id, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceEmbeddingStore {
    dim: usize,
    ids: Vec<String>,
    vectors: HashMap<String, Vec<f64>>,
}

impl SentenceEmbeddingStore {
    pub fn new(dim: usize) -> Self {
        SentenceEmbeddingStore {
            dim,
            ids: Vec::new(),
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: vector.len(),
                context: format!("sentence vector for `{id}`"),
            });
        }
        if self.vectors.contains_key(&id) {
            return Err(Error::InvalidInput(format!("duplicate sentence embedding id `{id}`")));
        }
        self.ids.push(id.clone());
        self.vectors.insert(id, vector);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    /// Lookup that fails with the missing id.
    pub fn require(&self, id: &str) -> Result<&[f64]> {
        self.get(id).ok_or_else(|| Error::MissingEmbedding(id.to_string()))
    }

    /// Reads a `dim<TAB>D` header followed by `id<TAB>f1 ... fD` lines and
    /// checks that `D == expected_dim`.
    pub fn load(path: impl AsRef<Path>, expected_dim: usize) -> Result<Self> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "missing `dim` header"))?;
        let dim = match header.trim_end().split_once('\t') {
            Some(("dim", d)) => d
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::parse(path, 1, format!("bad dimension: {e}")))?,
            _ => return Err(Error::parse(path, 1, "expected header `dim<TAB>N`")),
        };
        if dim != expected_dim {
            return Err(Error::Dimension {
                expected: expected_dim,
                found: dim,
                context: format!("{} header", path.display()),
            });
        }
        let mut store = SentenceEmbeddingStore::new(dim);
        for (n, line) in lines {
            let line_no = n + 1;
            let (id, values) = line
                .trim_end_matches('\r')
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, line_no, "expected `id<TAB>values`"))?;
            let vector = values
                .split(' ')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::parse(path, line_no, format!("non-numeric value `{s}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if vector.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: vector.len(),
                    context: format!("{}:{line_no}", path.display()),
                });
            }
            if store.vectors.contains_key(id) {
                return Err(Error::parse(path, line_no, format!("duplicate id `{id}`")));
            }
            store.insert(id, vector)?;
        }
        Ok(store)
    }

    /// Writes the store in the format `load` reads, ids in insertion order.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = format!("dim\t{}\n", self.dim);
        for id in &self.ids {
            out.push_str(id);
            out.push('\t');
            let values: Vec<String> = self.vectors[id].iter().map(|v| v.to_string()).collect();
            out.push_str(&values.join(" "));
            out.push('\n');
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

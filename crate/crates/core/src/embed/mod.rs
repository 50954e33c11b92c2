//! Skip-gram word embeddings with negative sampling.
//!
//! Vector files are UTF-8 text: a `<vocab_size> <dim>` header line, then one
//! line per token holding the token and `dim` space-separated reals.

mod train;

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use train::{context_pairs, pair_gradient, train, PairGradient, TrainConfig, TrainReport, UnigramSampler};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("vocabulary is empty after applying min_count {min_count}")]
    EmptyVocab { min_count: u64 },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("non-finite loss in epoch {epoch} at center token `{token}`")]
    NonFiniteLoss { epoch: usize, token: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{origin}:{line}: {message}")]
    Format {
        origin: String,
        line: usize,
        message: String,
    },
}

/// Tokens kept for training, most frequent first (ties by token).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Count tokens and drop those under `min_count`, except tokens in `keep`
    /// (promoted bigrams), which are retained whenever they occur.
    pub fn build<S: AsRef<str>>(sequences: &[Vec<S>], min_count: u64, keep: &BTreeSet<String>) -> Result<Self, EmbedError> {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for seq in sequences {
            for t in seq {
                *counts.entry(t.as_ref()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, u64)> = counts
            .into_iter()
            .filter(|(t, n)| *n >= min_count || keep.contains(*t))
            .collect();
        if kept.is_empty() {
            return Err(EmbedError::EmptyVocab { min_count });
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Ok(Self::from_counts(kept.into_iter().map(|(t, n)| (t.to_string(), n))))
    }

    fn from_counts(items: impl IntoIterator<Item = (String, u64)>) -> Self {
        let (tokens, counts): (Vec<String>, Vec<u64>) = items.into_iter().unzip();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocab { tokens, counts, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Map a sequence to vocabulary indices, dropping unknown tokens.
    pub fn encode<S: AsRef<str>>(&self, seq: &[S]) -> Vec<usize> {
        seq.iter().filter_map(|t| self.get(t.as_ref())).collect()
    }
}

/// Trained or imported word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    vocab: Vocab,
    dim: usize,
    input: Vec<f64>,
    /// Context vectors; empty for imported models.
    output: Vec<f64>,
}

impl EmbeddingModel {
    /// A model from explicit rows. Counts default to zero.
    pub fn from_rows(rows: Vec<(String, Vec<f64>)>) -> Result<Self, EmbedError> {
        let fail = |line, message: String| EmbedError::Format {
            origin: "rows".into(),
            line,
            message,
        };
        let dim = rows.first().map_or(0, |r| r.1.len());
        if dim == 0 {
            return Err(fail(0, "no rows or zero dimension".into()));
        }
        let mut input = Vec::with_capacity(rows.len() * dim);
        let mut seen = BTreeSet::new();
        let mut tokens = Vec::with_capacity(rows.len());
        for (i, (t, v)) in rows.into_iter().enumerate() {
            if v.len() != dim {
                return Err(fail(i + 1, format!("dimension {} differs from {dim}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(fail(i + 1, format!("non-finite value for `{t}`")));
            }
            if !seen.insert(t.clone()) {
                return Err(fail(i + 1, format!("duplicate token `{t}`")));
            }
            input.extend(v);
            tokens.push((t, 0));
        }
        Ok(EmbeddingModel {
            vocab: Vocab::from_counts(tokens),
            dim,
            input,
            output: Vec::new(),
        })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vocab.get(token).is_some()
    }

    pub fn lookup(&self, token: &str) -> Option<&[f64]> {
        self.vocab.get(token).map(|i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.input[i * self.dim..(i + 1) * self.dim]
    }

    pub fn output_row(&self, i: usize) -> Option<&[f64]> {
        self.output.get(i * self.dim..(i + 1) * self.dim)
    }

    /// Hex SHA-256 over tokens, dimension and input vector bits.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        for t in self.vocab.tokens() {
            h.update((t.len() as u64).to_le_bytes());
            h.update(t.as_bytes());
        }
        for x in &self.input {
            h.update(x.to_bits().to_le_bytes());
        }
        hex(&h.finalize())
    }

    pub fn format_vectors(&self) -> String {
        format_rows(self.dim, self.vocab.tokens().iter().enumerate().map(|(i, t)| (t.as_str(), self.row(i))))
    }

    pub fn export_vectors(&self, path: &Path) -> Result<(), EmbedError> {
        std::fs::write(path, self.format_vectors()).map_err(|source| EmbedError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn parse_vectors(text: &str, origin: &str) -> Result<Self, EmbedError> {
        let rows = parse_rows(text, origin)?;
        Self::from_rows(rows)
    }

    pub fn import_vectors(path: &Path) -> Result<Self, EmbedError> {
        let text = std::fs::read_to_string(path).map_err(|source| EmbedError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_vectors(&text, &path.display().to_string())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Render rows in the vector text format. Values print in shortest
/// round-trip form, so parsing the output restores them exactly.
pub fn format_rows<'a>(dim: usize, rows: impl IntoIterator<Item = (&'a str, &'a [f64])>) -> String {
    let rows: Vec<_> = rows.into_iter().collect();
    let mut out = format!("{} {dim}\n", rows.len());
    for (t, v) in rows {
        out.push_str(t);
        for x in v {
            let _ = write!(out, " {x}");
        }
        out.push('\n');
    }
    out
}

/// Parse the vector text format into `(token, vector)` rows, checking the
/// header counts, row dimensions and values.
pub fn parse_rows(text: &str, origin: &str) -> Result<Vec<(String, Vec<f64>)>, EmbedError> {
    let fail = |line, message: String| EmbedError::Format {
        origin: origin.to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| fail(1, "missing `<rows> <dim>` header".into()))?;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(|x| x.parse())
        .collect::<Result<_, _>>()
        .map_err(|_| fail(1, format!("bad header `{header}`")))?;
    let [n, dim] = nums[..] else {
        return Err(fail(1, format!("bad header `{header}`")));
    };
    if dim == 0 {
        return Err(fail(1, "dimension must be positive".into()));
    }
    let mut rows = Vec::with_capacity(n);
    let mut seen = BTreeSet::new();
    for (i, line) in lines {
        let mut parts = line.split_whitespace();
        let token = parts.next().unwrap_or_default().to_string();
        let values: Vec<f64> = parts
            .map(|x| x.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| fail(i + 1, format!("bad value: {e}")))?;
        if values.len() != dim {
            return Err(fail(i + 1, format!("expected {dim} values for `{token}`, found {}", values.len())));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(fail(i + 1, format!("non-finite value for `{token}`")));
        }
        if !seen.insert(token.clone()) {
            return Err(fail(i + 1, format!("duplicate token `{token}`")));
        }
        rows.push((token, values));
    }
    if rows.len() != n {
        return Err(fail(1, format!("header declares {n} rows, found {}", rows.len())));
    }
    Ok(rows)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity, or `None` when either vector is zero.
pub fn cosine_checked(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Cosine similarity in `[-1, 1]`; zero vectors score 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    cosine_checked(a, b).unwrap_or(0.0)
}

#[cfg(test)]
mod tests;

use std::collections::BTreeMap;
use std::path::Path;

use super::NormalizedTriple;
use crate::tsv::{self, TsvError};

/// Frequent `verb_particle` pairs promoted to single vocabulary tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigramTable {
    entries: BTreeMap<String, u64>,
    pub min_count: u64,
}

impl BigramTable {
    /// An empty table; nothing is ever promoted.
    pub fn empty() -> Self {
        BigramTable {
            entries: BTreeMap::new(),
            min_count: u64::MAX,
        }
    }

    /// Keep the entries of `counts` reaching `min_count`.
    pub fn from_counts(counts: BTreeMap<String, u64>, min_count: u64) -> Self {
        let min_count = min_count.max(1);
        let entries = counts.into_iter().filter(|(_, n)| *n >= min_count).collect();
        BigramTable { entries, min_count }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn count(&self, token: &str) -> Option<u64> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// `token<TAB>count` lines in token order.
    pub fn format(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{}\n", tsv::join([k.as_str(), &v.to_string()])))
            .collect()
    }

    /// Parse a table file. Its threshold is the smallest stored count.
    pub fn parse(text: &str, origin: &str) -> Result<Self, TsvError> {
        let mut entries = BTreeMap::new();
        for row in tsv::parse_rows(text, origin, 2, 2)? {
            let n: u64 = row
                .field(1)
                .parse()
                .map_err(|_| tsv::row_error(origin, &row, format!("bad count `{}`", row.field(1))))?;
            if entries.insert(row.field(0).to_string(), n).is_some() {
                return Err(tsv::row_error(origin, &row, format!("duplicate bigram `{}`", row.field(0))));
            }
        }
        let min_count = entries.values().copied().min().unwrap_or(u64::MAX);
        Ok(BigramTable { entries, min_count })
    }

    pub fn write(&self, path: &Path) -> Result<(), TsvError> {
        tsv::write_file(path, &self.format())
    }

    pub fn read(path: &Path) -> Result<Self, TsvError> {
        let text = std::fs::read_to_string(path).map_err(|source| TsvError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }
}

/// Count `verb_particle` pairs over `triples` and keep those reaching `min_count`.
pub fn promote_bigrams<'a>(triples: impl IntoIterator<Item = &'a NormalizedTriple>, min_count: u64) -> BigramTable {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for t in triples {
        if let Some(k) = t.predicate.bigram_key() {
            *counts.entry(k).or_default() += 1;
        }
    }
    BigramTable::from_counts(counts, min_count)
}

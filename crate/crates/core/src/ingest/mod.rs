//! Annotated-corpus ingestion.
//!
//! The corpus is UTF-8 JSON Lines, one document per line:
//!
//! ```json
//! {"schema": 1, "external_id": "doc1", "title": "Thora Birch", "text": "...",
//!  "source_url": null, "timestamp": null,
//!  "sentences": [{
//!     "span": [0, 35],
//!     "tokens": [{"span": [0, 5], "pos": "NNP", "lemma": "Thora"}],
//!     "clauses": [{"subject": [0, 11], "predicate": [12, 14], "object": [15, 34],
//!                  "adverbials": [], "annotator": "clausie"}],
//!     "mentions": [{"span": [0, 11], "ner": "PER", "kb_id": "Q200566", "annotator": "aida"}]
//!  }],
//!  "coref": [[[36, 39], [0, 11]]]}
//! ```
//!
//! All spans are byte offsets into `text`. Coreference pairs are document
//! level so that a pronoun can point into an earlier sentence. Annotator
//! names may not contain `+`, which joins the names of merged annotations.

mod build;
mod merge;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, NerType};
use crate::span::Span;

pub use build::{build_graph, BuildReport};
pub use merge::{merge_annotations, mention_keys, AnnotationLayer, MergeMode, MergePolicy};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenRecord {
    pub span: Span,
    pub pos: String,
    pub lemma: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClauseRecord {
    pub subject: Span,
    pub predicate: Span,
    #[serde(default)]
    pub object: Option<Span>,
    #[serde(default)]
    pub adverbials: Vec<Span>,
    pub annotator: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MentionRecord {
    pub span: Span,
    #[serde(default)]
    pub ner: NerType,
    #[serde(default)]
    pub kb_id: Option<String>,
    pub annotator: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentenceRecord {
    pub span: Span,
    #[serde(default)]
    pub tokens: Vec<TokenRecord>,
    #[serde(default)]
    pub clauses: Vec<ClauseRecord>,
    #[serde(default)]
    pub mentions: Vec<MentionRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatedDocumentRecord {
    pub schema: u32,
    pub external_id: String,
    pub title: String,
    pub text: String,
    #[serde(default)]
    pub source_url: Option<String>,
    #[serde(default)]
    pub timestamp: Option<String>,
    #[serde(default)]
    pub sentences: Vec<SentenceRecord>,
    #[serde(default)]
    pub coref: Vec<(Span, Span)>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("document `{external_id}`: {source}")]
    Graph {
        external_id: String,
        source: GraphError,
    },
}

/// A skipped line in lenient mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

impl AnnotatedDocumentRecord {
    pub fn from_line(line: &str) -> Result<Self, String> {
        let rec: AnnotatedDocumentRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        rec.validate()?;
        Ok(rec)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serialization cannot fail")
    }

    /// Check schema version, span bounds and token ordering.
    pub fn validate(&self) -> Result<(), String> {
        if self.schema != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema
            ));
        }
        if self.external_id.is_empty()
            || self.external_id.contains(['\t', '\n', '\r', '#'])
        {
            return Err(format!("invalid external_id `{}`", self.external_id));
        }
        let text = &self.text;
        let in_text = |what: &str, s: &Span| -> Result<(), String> {
            if s.slice(text).is_none() {
                return Err(format!("{what} span {s} is empty or outside the text"));
            }
            Ok(())
        };
        let annotator = |name: &str| -> Result<(), String> {
            if name.is_empty() || name.contains('+') {
                return Err(format!("invalid annotator name `{name}`"));
            }
            Ok(())
        };
        let mut prev_sentence_end = 0;
        for (si, s) in self.sentences.iter().enumerate() {
            in_text("sentence", &s.span)?;
            if s.span.start < prev_sentence_end {
                return Err(format!("sentence {si} overlaps or precedes the previous sentence"));
            }
            prev_sentence_end = s.span.end;
            let within = |what: &str, sp: &Span| -> Result<(), String> {
                in_text(what, sp)?;
                if !s.span.contains(sp) {
                    return Err(format!("{what} span {sp} lies outside sentence {si}"));
                }
                Ok(())
            };
            let mut prev = s.span.start;
            for t in &s.tokens {
                within("token", &t.span)?;
                if t.span.start < prev {
                    return Err(format!("token {} overlaps or precedes the previous token", t.span));
                }
                prev = t.span.end;
            }
            for c in &s.clauses {
                within("subject", &c.subject)?;
                within("predicate", &c.predicate)?;
                if let Some(o) = &c.object {
                    within("object", o)?;
                }
                for a in &c.adverbials {
                    within("adverbial", a)?;
                }
                annotator(&c.annotator)?;
            }
            for m in &s.mentions {
                within("mention", &m.span)?;
                annotator(&m.annotator)?;
                if m.kb_id.as_deref() == Some("") {
                    return Err("empty kb_id".to_string());
                }
            }
        }
        for (a, b) in &self.coref {
            in_text("coref", a)?;
            in_text("coref", b)?;
        }
        Ok(())
    }
}

/// Streaming reader over a JSON Lines corpus.
///
/// In lenient mode malformed lines are skipped and recorded as warnings;
/// otherwise the first malformed line is yielded as an error.
pub struct CorpusReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    lenient: bool,
    warnings: Vec<ParseWarning>,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R, lenient: bool) -> Self {
        CorpusReader {
            lines: reader.lines(),
            line_no: 0,
            lenient,
            warnings: Vec::new(),
        }
    }

    pub fn warnings(&self) -> &[ParseWarning] {
        &self.warnings
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<AnnotatedDocumentRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(source) => {
                    return Some(Err(IngestError::Io {
                        path: format!("line {}", self.line_no + 1),
                        source,
                    }))
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            match AnnotatedDocumentRecord::from_line(&line) {
                Ok(rec) => return Some(Ok(rec)),
                Err(message) if self.lenient => {
                    log::warn!("skipping corpus line {}: {message}", self.line_no);
                    self.warnings.push(ParseWarning {
                        line: self.line_no,
                        message,
                    });
                }
                Err(message) => {
                    return Some(Err(IngestError::Parse {
                        line: self.line_no,
                        message,
                    }))
                }
            }
        }
    }
}

pub fn parse_corpus(path: &Path, lenient: bool) -> Result<CorpusReader<BufReader<File>>, IngestError> {
    let f = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(CorpusReader::new(BufReader::new(f), lenient))
}

//! Building annotated records from tagged token lists.

use std::ops::Range;

use crate::graph::NerType;
use crate::ingest::{AnnotatedDocumentRecord, ClauseRecord, MentionRecord, SentenceRecord, TokenRecord, SCHEMA_VERSION};
use crate::span::Span;

/// Incrementally assembles one [`AnnotatedDocumentRecord`].
///
/// Sentences are given as whitespace-separated `word/POS[/lemma]` items
/// (lemma defaults to the lowercased word) and joined with single spaces.
/// Clause and mention arguments are token index ranges within a sentence.
///
/// ```
/// use clausegraph::synth::DocBuilder;
/// use clausegraph::graph::NerType;
///
/// let mut b = DocBuilder::new("doc1", "Ada");
/// let s = b.sentence("Ada/NNP was/VBD/be born/VBN/bear in/IN London/NNP ./.");
/// b.clause(s, 0..1, 1..3, Some(3..5), &[]);
/// b.mention(s, 0..1, NerType::Per, Some("Q7259"));
/// b.mention(s, 4..5, NerType::Loc, Some("Q84"));
/// let rec = b.build();
/// assert_eq!(rec.text, "Ada was born in London .");
/// ```
#[derive(Debug, Clone)]
pub struct DocBuilder {
    record: AnnotatedDocumentRecord,
    clause_annotator: String,
    mention_annotator: String,
}

impl DocBuilder {
    pub fn new(external_id: &str, title: &str) -> Self {
        DocBuilder {
            record: AnnotatedDocumentRecord {
                schema: SCHEMA_VERSION,
                external_id: external_id.to_string(),
                title: title.to_string(),
                text: String::new(),
                source_url: None,
                timestamp: None,
                sentences: Vec::new(),
                coref: Vec::new(),
            },
            clause_annotator: "clausie".to_string(),
            mention_annotator: "aida".to_string(),
        }
    }

    pub fn annotators(&mut self, clauses: &str, mentions: &str) -> &mut Self {
        self.clause_annotator = clauses.to_string();
        self.mention_annotator = mentions.to_string();
        self
    }

    /// Append a sentence and return its index.
    pub fn sentence(&mut self, tagged: &str) -> usize {
        let text = &mut self.record.text;
        if !text.is_empty() {
            text.push(' ');
        }
        let start = text.len();
        let mut tokens = Vec::new();
        for (i, item) in tagged.split_whitespace().enumerate() {
            let mut parts = item.split('/');
            let word = parts.next().unwrap_or_default();
            let pos = parts.next().unwrap_or("X");
            let lemma = parts.next().map_or_else(|| word.to_lowercase(), str::to_string);
            if i > 0 {
                text.push(' ');
            }
            let s = text.len();
            text.push_str(word);
            tokens.push(TokenRecord {
                span: Span::new(s, text.len()),
                pos: pos.to_string(),
                lemma,
            });
        }
        self.record.sentences.push(SentenceRecord {
            span: Span::new(start, text.len()),
            tokens,
            clauses: Vec::new(),
            mentions: Vec::new(),
        });
        self.record.sentences.len() - 1
    }

    /// Span covering tokens `r` of sentence `s`.
    pub fn span(&self, s: usize, r: Range<usize>) -> Span {
        let toks = &self.record.sentences[s].tokens;
        Span::new(toks[r.start].span.start, toks[r.end - 1].span.end)
    }

    pub fn clause(&mut self, s: usize, subject: Range<usize>, predicate: Range<usize>, object: Option<Range<usize>>, adverbials: &[Range<usize>]) -> &mut Self {
        let annotator = self.clause_annotator.clone();
        self.clause_by(s, subject, predicate, object, adverbials, &annotator)
    }

    pub fn clause_by(
        &mut self,
        s: usize,
        subject: Range<usize>,
        predicate: Range<usize>,
        object: Option<Range<usize>>,
        adverbials: &[Range<usize>],
        annotator: &str,
    ) -> &mut Self {
        let c = ClauseRecord {
            subject: self.span(s, subject),
            predicate: self.span(s, predicate),
            object: object.map(|o| self.span(s, o)),
            adverbials: adverbials.iter().map(|a| self.span(s, a.clone())).collect(),
            annotator: annotator.to_string(),
        };
        self.record.sentences[s].clauses.push(c);
        self
    }

    pub fn mention(&mut self, s: usize, r: Range<usize>, ner: NerType, kb_id: Option<&str>) -> &mut Self {
        let annotator = self.mention_annotator.clone();
        self.mention_by(s, r, ner, kb_id, &annotator)
    }

    pub fn mention_by(&mut self, s: usize, r: Range<usize>, ner: NerType, kb_id: Option<&str>, annotator: &str) -> &mut Self {
        let m = MentionRecord {
            span: self.span(s, r),
            ner,
            kb_id: kb_id.map(str::to_string),
            annotator: annotator.to_string(),
        };
        self.record.sentences[s].mentions.push(m);
        self
    }

    /// Mark the mention at `(s1, r1)` as coreferent with the one at `(s2, r2)`.
    pub fn coref(&mut self, s1: usize, r1: Range<usize>, s2: usize, r2: Range<usize>) -> &mut Self {
        let pair = (self.span(s1, r1), self.span(s2, r2));
        self.record.coref.push(pair);
        self
    }

    pub fn build(&self) -> AnnotatedDocumentRecord {
        self.record.clone()
    }
}

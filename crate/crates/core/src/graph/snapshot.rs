//! Flat-file graph snapshots.
//!
//! A snapshot is a directory of UTF-8 tab-separated files, one record per
//! line, fields escaped as in [`crate::tsv`]. Rows are written in ordinal
//! order. Spans are `start:end` byte offsets into the document text; an
//! empty field means "absent".
//!
//! | file            | fields                                                                                      |
//! |-----------------|---------------------------------------------------------------------------------------------|
//! | `documents.tsv` | ordinal, external_id, title, source_url, timestamp, text                                    |
//! | `sentences.tsv` | ordinal, document, index_in_doc, span, text                                                 |
//! | `tokens.tsv`    | sentence, token_index, span, text, pos, lemma                                                   |
//! | `clauses.tsv`   | ordinal, sentence, index_in_sentence, subject_span, predicate_text, predicate_tokens (comma list), object_span, adverbial_spans (comma list) |
//! | `mentions.tsv`  | ordinal, clause, span, surface, pos, lemma, role, ner_type, annotator                      |
//! | `entities.tsv`  | ordinal, kb_id, canonical_name                                                              |
//! | `edges.tsv`     | kind, src (`kind#ordinal`), dst (`kind#ordinal`)                                            |
//!
//! Edges are written sorted by (kind, src, dst). Reading replays the records through the graph operations, so a snapshot
//! that violates a graph invariant fails to load.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::{
    ClauseProps, DocumentProps, EdgeKind, Graph, GraphError, MentionProps, SentenceProps, Token, VertexId,
    VertexKind,
};
use crate::span::Span;
use crate::tsv;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("{file}: {source}")]
    Io {
        file: String,
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}:{line}: {source}")]
    Graph {
        file: String,
        line: usize,
        source: GraphError,
    },
}

const FILES: [&str; 7] = [
    "documents.tsv",
    "sentences.tsv",
    "tokens.tsv",
    "clauses.tsv",
    "mentions.tsv",
    "entities.tsv",
    "edges.tsv",
];

fn opt(s: &Option<String>) -> &str {
    s.as_deref().unwrap_or("")
}

fn span_list(spans: &[Span]) -> String {
    spans.iter().map(Span::to_string).collect::<Vec<_>>().join(",")
}

fn vid(id: VertexId) -> String {
    format!("{}#{}", id.kind, id.ordinal)
}

pub fn write_snapshot(graph: &Graph, dir: &Path) -> Result<(), SnapshotError> {
    std::fs::create_dir_all(dir).map_err(|source| SnapshotError::Io {
        file: dir.display().to_string(),
        source,
    })?;
    let mut lines: [Vec<String>; 7] = Default::default();

    for (i, d) in graph.documents.iter().enumerate() {
        lines[0].push(tsv::join([
            i.to_string().as_str(),
            &d.props.external_id,
            &d.props.title,
            opt(&d.props.source_url),
            opt(&d.props.timestamp),
            &d.text,
        ]));
    }
    for (i, s) in graph.sentences.iter().enumerate() {
        lines[1].push(tsv::join([
            i.to_string(),
            s.document.to_string(),
            s.props.index_in_doc.to_string(),
            s.props.char_span.to_string(),
            s.props.text.clone(),
        ]));
        for (t, tok) in s.props.tokens.iter().enumerate() {
            lines[2].push(tsv::join([
                i.to_string(),
                t.to_string(),
                tok.span.to_string(),
                tok.text.clone(),
                tok.pos.clone(),
                tok.lemma.clone(),
            ]));
        }
    }
    for (i, c) in graph.clauses.iter().enumerate() {
        let p = &c.props;
        lines[3].push(tsv::join([
            i.to_string(),
            c.sentence.to_string(),
            p.index_in_sentence.to_string(),
            p.subject_span.to_string(),
            p.predicate_text.clone(),
            p.predicate_token_indices
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
            p.object_span.map(|s| s.to_string()).unwrap_or_default(),
            span_list(&p.adverbial_spans),
        ]));
    }
    for (i, m) in graph.mentions.iter().enumerate() {
        let p = &m.props;
        lines[4].push(tsv::join([
            i.to_string().as_str(),
            &m.clause.to_string(),
            &p.char_span.to_string(),
            &p.surface,
            &p.pos,
            &p.lemma,
            p.syntactic_role.as_str(),
            p.ner_type.as_str(),
            &p.source_annotator,
        ]));
    }
    for (i, e) in graph.entities.iter().enumerate() {
        lines[5].push(tsv::join([i.to_string().as_str(), &e.kb_id, &e.canonical_name]));
    }
    let mut edges = graph.edges.clone();
    edges.sort_by_key(|e| (e.kind, e.src, e.dst));
    for e in &edges {
        lines[6].push(tsv::join([e.kind.as_str().to_string(), vid(e.src), vid(e.dst)]));
    }

    for (name, rows) in FILES.iter().zip(lines.iter()) {
        let path = dir.join(name);
        let io = |source| SnapshotError::Io {
            file: path.display().to_string(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        for row in rows {
            writeln!(w, "{row}").map_err(io)?;
        }
        w.flush().map_err(io)?;
    }
    Ok(())
}

struct Rows {
    file: String,
    rows: Vec<(usize, Vec<String>)>,
}

impl Rows {
    fn read(dir: &Path, name: &str, arity: usize) -> Result<Self, SnapshotError> {
        let path = dir.join(name);
        let file = path.display().to_string();
        let f = File::open(&path).map_err(|source| SnapshotError::Io {
            file: file.clone(),
            source,
        })?;
        let mut rows = Vec::new();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|source| SnapshotError::Io {
                file: file.clone(),
                source,
            })?;
            let fields = tsv::split(&line);
            if fields.len() != arity {
                return Err(SnapshotError::Parse {
                    file,
                    line: i + 1,
                    message: format!("expected {arity} fields, found {}", fields.len()),
                });
            }
            rows.push((i + 1, fields));
        }
        Ok(Rows { file, rows })
    }

    fn err(&self, line: usize, message: impl Into<String>) -> SnapshotError {
        SnapshotError::Parse {
            file: self.file.clone(),
            line,
            message: message.into(),
        }
    }

    fn graph_err(&self, line: usize, source: GraphError) -> SnapshotError {
        SnapshotError::Graph {
            file: self.file.clone(),
            line,
            source,
        }
    }

    fn num<T: std::str::FromStr>(&self, line: usize, field: &str) -> Result<T, SnapshotError> {
        field
            .parse()
            .map_err(|_| self.err(line, format!("expected a number, found `{field}`")))
    }

    fn span(&self, line: usize, field: &str) -> Result<Span, SnapshotError> {
        field.parse().map_err(|e: crate::span::ParseSpanError| self.err(line, e.to_string()))
    }

    fn spans(&self, line: usize, field: &str) -> Result<Vec<Span>, SnapshotError> {
        if field.is_empty() {
            return Ok(Vec::new());
        }
        field.split(',').map(|s| self.span(line, s)).collect()
    }

    fn ordinal(&self, line: usize, field: &str, expected: usize) -> Result<(), SnapshotError> {
        let got: usize = self.num(line, field)?;
        if got != expected {
            return Err(self.err(line, format!("ordinal {got} out of sequence (expected {expected})")));
        }
        Ok(())
    }

    fn vertex(&self, line: usize, field: &str) -> Result<VertexId, SnapshotError> {
        let (k, o) = field
            .split_once('#')
            .ok_or_else(|| self.err(line, format!("malformed vertex id `{field}`")))?;
        let kind: VertexKind = k.parse().map_err(|e: String| self.err(line, e))?;
        Ok(VertexId::new(kind, self.num(line, o)?))
    }
}

fn none_if_empty(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_string())
}

pub fn read_snapshot(dir: &Path) -> Result<Graph, SnapshotError> {
    let docs = Rows::read(dir, FILES[0], 6)?;
    let sents = Rows::read(dir, FILES[1], 5)?;
    let toks = Rows::read(dir, FILES[2], 6)?;
    let clauses = Rows::read(dir, FILES[3], 8)?;
    let mentions = Rows::read(dir, FILES[4], 9)?;
    let entities = Rows::read(dir, FILES[5], 3)?;
    let edges = Rows::read(dir, FILES[6], 3)?;

    let mut g = Graph::new();
    for (i, (line, f)) in docs.rows.iter().enumerate() {
        docs.ordinal(*line, &f[0], i)?;
        let props = DocumentProps {
            external_id: f[1].clone(),
            title: f[2].clone(),
            source_url: none_if_empty(&f[3]),
            timestamp: none_if_empty(&f[4]),
        };
        g.add_document(props, f[5].clone()).map_err(|e| docs.graph_err(*line, e))?;
    }

    let mut tokens: Vec<Vec<Token>> = vec![Vec::new(); sents.rows.len()];
    for (line, f) in &toks.rows {
        let s: usize = toks.num(*line, &f[0])?;
        let t: usize = toks.num(*line, &f[1])?;
        let slot = tokens
            .get_mut(s)
            .ok_or_else(|| toks.err(*line, format!("unknown sentence {s}")))?;
        if slot.len() != t {
            return Err(toks.err(*line, format!("token {t} out of sequence")));
        }
        slot.push(Token {
            span: toks.span(*line, &f[2])?,
            text: f[3].clone(),
            pos: f[4].clone(),
            lemma: f[5].clone(),
        });
    }
    for (i, (line, f)) in sents.rows.iter().enumerate() {
        sents.ordinal(*line, &f[0], i)?;
        let doc = VertexId::document(sents.num(*line, &f[1])?);
        let props = SentenceProps {
            index_in_doc: sents.num(*line, &f[2])?,
            char_span: sents.span(*line, &f[3])?,
            text: f[4].clone(),
            tokens: std::mem::take(&mut tokens[i]),
        };
        g.attach_sentence(doc, props).map_err(|e| sents.graph_err(*line, e))?;
    }
    for (i, (line, f)) in clauses.rows.iter().enumerate() {
        clauses.ordinal(*line, &f[0], i)?;
        let sent = VertexId::sentence(clauses.num(*line, &f[1])?);
        let predicate_token_indices = if f[5].is_empty() {
            Vec::new()
        } else {
            f[5].split(',')
                .map(|x| clauses.num(*line, x))
                .collect::<Result<_, _>>()?
        };
        let props = ClauseProps {
            index_in_sentence: clauses.num(*line, &f[2])?,
            subject_span: clauses.span(*line, &f[3])?,
            predicate_text: f[4].clone(),
            predicate_token_indices,
            object_span: if f[6].is_empty() {
                None
            } else {
                Some(clauses.span(*line, &f[6])?)
            },
            adverbial_spans: clauses.spans(*line, &f[7])?,
        };
        g.attach_clause(sent, props).map_err(|e| clauses.graph_err(*line, e))?;
    }
    for (i, (line, f)) in mentions.rows.iter().enumerate() {
        mentions.ordinal(*line, &f[0], i)?;
        let clause = VertexId::clause(mentions.num(*line, &f[1])?);
        let props = MentionProps {
            char_span: mentions.span(*line, &f[2])?,
            surface: f[3].clone(),
            pos: f[4].clone(),
            lemma: f[5].clone(),
            syntactic_role: f[6].parse().map_err(|e: String| mentions.err(*line, e))?,
            ner_type: f[7].parse().map_err(|e: String| mentions.err(*line, e))?,
            source_annotator: f[8].clone(),
        };
        g.attach_mention(clause, props).map_err(|e| mentions.graph_err(*line, e))?;
    }
    for (i, (line, f)) in entities.rows.iter().enumerate() {
        entities.ordinal(*line, &f[0], i)?;
        if g.entity_index.contains_key(&f[1]) {
            return Err(entities.err(*line, format!("duplicate kb_id `{}`", f[1])));
        }
        g.ensure_entity(&f[1], &f[2]);
    }

    let mut hierarchy = 0usize;
    for (line, f) in &edges.rows {
        let kind: EdgeKind = f[0].parse().map_err(|e: String| edges.err(*line, e))?;
        let src = edges.vertex(*line, &f[1])?;
        let dst = edges.vertex(*line, &f[2])?;
        match kind {
            EdgeKind::MentionRefersToEntity => {
                let e = g
                    .entity(dst)
                    .cloned()
                    .ok_or_else(|| edges.graph_err(*line, GraphError::MissingVertex(dst)))?;
                g.link_entity(src, &e.kb_id, &e.canonical_name)
                    .map_err(|err| edges.graph_err(*line, err))?;
            }
            EdgeKind::CorefLink => {
                g.add_coref_link(src, dst).map_err(|err| edges.graph_err(*line, err))?;
            }
            _ => {
                let edge = super::Edge { src, dst, kind };
                if !g.has_edge(&edge) {
                    return Err(edges.err(*line, "hierarchy edge does not match vertex parents"));
                }
                hierarchy += 1;
            }
        }
    }
    let expected = g.sentences.len() + g.clauses.len() + g.mentions.len();
    if hierarchy != expected {
        return Err(SnapshotError::Parse {
            file: edges.file.clone(),
            line: edges.rows.len(),
            message: format!("{hierarchy} hierarchy edges listed, {expected} implied by vertices"),
        });
    }
    Ok(g)
}

//! Building the property graph from annotated records.

use std::collections::HashMap;

use super::{merge_annotations, AnnotatedDocumentRecord, AnnotationLayer, IngestError, MergePolicy};
use crate::graph::{ClauseProps, DocumentProps, Graph, MentionProps, SentenceProps, SyntacticRole, Token};
use crate::span::Span;

/// Counters collected while building a graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub documents: usize,
    /// Merged mentions not contained in any clause constituent.
    pub unattached_mentions: usize,
    /// Coreference pairs where either side has no mention vertex.
    pub unresolved_coref_pairs: usize,
}

fn err(external_id: &str) -> impl Fn(crate::graph::GraphError) -> IngestError + '_ {
    move |source| IngestError::Graph {
        external_id: external_id.to_string(),
        source,
    }
}

/// Merge annotations and load `records` into a fresh graph.
///
/// Records are processed in `external_id` order, so the resulting graph does
/// not depend on input order. A mention is attached under every clause one of
/// whose constituents contains it: subject, object, or an adverbial
/// (`other`).
pub fn build_graph(
    records: impl IntoIterator<Item = AnnotatedDocumentRecord>,
    policy: &MergePolicy,
) -> Result<(Graph, BuildReport), IngestError> {
    let mut records: Vec<_> = records.into_iter().collect();
    records.sort_by(|a, b| a.external_id.cmp(&b.external_id));
    let mut g = Graph::new();
    let mut report = BuildReport::default();
    for rec in &records {
        let rec = merge_annotations(rec, AnnotationLayer::Mentions, policy);
        let rec = merge_annotations(&rec, AnnotationLayer::Clauses, policy);
        add_record(&mut g, &rec, &mut report)?;
        report.documents += 1;
    }
    Ok((g, report))
}

fn add_record(g: &mut Graph, rec: &AnnotatedDocumentRecord, report: &mut BuildReport) -> Result<(), IngestError> {
    let e = err(&rec.external_id);
    let doc = g
        .add_document(
            DocumentProps {
                title: rec.title.clone(),
                source_url: rec.source_url.clone(),
                timestamp: rec.timestamp.clone(),
                external_id: rec.external_id.clone(),
            },
            rec.text.clone(),
        )
        .map_err(&e)?;
    let mut by_span: HashMap<Span, Vec<_>> = HashMap::new();
    for (si, s) in rec.sentences.iter().enumerate() {
        let tokens: Vec<Token> = s
            .tokens
            .iter()
            .map(|t| Token {
                span: t.span,
                text: t.span.slice(&rec.text).unwrap_or_default().to_string(),
                pos: t.pos.clone(),
                lemma: t.lemma.clone(),
            })
            .collect();
        let sent = g
            .attach_sentence(
                doc,
                SentenceProps {
                    text: s.span.slice(&rec.text).unwrap_or_default().to_string(),
                    index_in_doc: si as u32,
                    char_span: s.span,
                    tokens: tokens.clone(),
                },
            )
            .map_err(&e)?;
        let mut clause_ids = Vec::with_capacity(s.clauses.len());
        for (ci, c) in s.clauses.iter().enumerate() {
            let predicate_token_indices: Vec<usize> = tokens
                .iter()
                .enumerate()
                .filter(|(_, t)| c.predicate.contains(&t.span))
                .map(|(i, _)| i)
                .collect();
            let id = g
                .attach_clause(
                    sent,
                    ClauseProps {
                        subject_span: c.subject,
                        predicate_text: c.predicate.slice(&rec.text).unwrap_or_default().to_string(),
                        predicate_token_indices,
                        object_span: c.object,
                        adverbial_spans: c.adverbials.clone(),
                        index_in_sentence: ci as u32,
                    },
                )
                .map_err(&e)?;
            clause_ids.push((id, c));
        }
        for m in &s.mentions {
            let covered: Vec<&Token> = tokens.iter().filter(|t| m.span.contains(&t.span)).collect();
            let pos = covered.last().map(|t| t.pos.clone()).unwrap_or_default();
            let lemma = covered.iter().map(|t| t.lemma.as_str()).collect::<Vec<_>>().join(" ");
            let surface = m.span.slice(&rec.text).unwrap_or_default().to_string();
            let mut attached = false;
            for (clause, c) in &clause_ids {
                let role = if c.subject.contains(&m.span) {
                    SyntacticRole::Subject
                } else if c.object.is_some_and(|o| o.contains(&m.span)) {
                    SyntacticRole::Object
                } else if c.adverbials.iter().any(|a| a.contains(&m.span)) {
                    SyntacticRole::Other
                } else {
                    continue;
                };
                let mid = g
                    .attach_mention(
                        *clause,
                        MentionProps {
                            surface: surface.clone(),
                            char_span: m.span,
                            pos: pos.clone(),
                            lemma: lemma.clone(),
                            syntactic_role: role,
                            ner_type: m.ner,
                            source_annotator: m.annotator.clone(),
                        },
                    )
                    .map_err(&e)?;
                if let Some(kb) = &m.kb_id {
                    g.link_entity(mid, kb, &surface).map_err(&e)?;
                }
                by_span.entry(m.span).or_default().push(mid);
                attached = true;
            }
            if !attached {
                report.unattached_mentions += 1;
            }
        }
    }
    for (a, b) in &rec.coref {
        let (Some(xs), Some(ys)) = (by_span.get(a), by_span.get(b)) else {
            report.unresolved_coref_pairs += 1;
            continue;
        };
        if a == b {
            continue;
        }
        for &x in xs {
            for &y in ys {
                g.add_coref_link(x, y).map_err(&e)?;
            }
        }
    }
    Ok(())
}

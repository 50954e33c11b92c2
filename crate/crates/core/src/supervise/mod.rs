//! Distant supervision: transferring sentence-level gold facts to clauses.
//!
//! A clause takes part when it has exactly one entity-resolving mention in
//! subject position and one in object position. It receives a fact's
//! relation when its subject mention matches the fact's subject span and its
//! object mention matches the fact's object span. A pronoun resolved through
//! coreference may also match by its antecedent's span.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Graph, SyntacticRole, VertexId};
use crate::normalize::unique_role_entity;
use crate::span::{Span, SpanMatch};
use crate::tsv::{self, TsvError};

#[derive(Debug, Error)]
pub enum SuperviseError {
    #[error(transparent)]
    Tsv(#[from] TsvError),
    #[error("gold fact {index} ({sentence}): {message}")]
    Gold {
        index: usize,
        sentence: String,
        message: String,
    },
}

/// A labeled `⟨subject, relation, object⟩` of one sentence. Spans are byte
/// offsets into the document text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GoldFact {
    /// Sentence key `external_id#sentence_index`.
    pub sentence_id: String,
    pub subject_span: Span,
    pub object_span: Span,
    pub relation_id: String,
    pub fold: Option<u32>,
}

/// Gold lines: `sentence_id, subject s:e, object s:e, relation_id[, fold]`.
pub fn parse_gold(text: &str, origin: &str) -> Result<Vec<GoldFact>, TsvError> {
    tsv::parse_rows(text, origin, 4, 5)?
        .into_iter()
        .map(|r| {
            let bad = |m: String| tsv::row_error(origin, &r, m);
            let fold = match r.field(4) {
                "" => None,
                f => Some(f.parse().map_err(|_| bad(format!("bad fold `{f}`")))?),
            };
            if r.field(3).is_empty() {
                return Err(bad("empty relation id".into()));
            }
            Ok(GoldFact {
                sentence_id: r.field(0).to_string(),
                subject_span: r.field(1).parse().map_err(|e| bad(format!("{e}")))?,
                object_span: r.field(2).parse().map_err(|e| bad(format!("{e}")))?,
                relation_id: r.field(3).to_string(),
                fold,
            })
        })
        .collect()
}

pub fn format_gold(facts: &[GoldFact]) -> String {
    facts
        .iter()
        .map(|f| {
            let fold = f.fold.map(|x| x.to_string()).unwrap_or_default();
            let mut fields = vec![f.sentence_id.clone(), f.subject_span.to_string(), f.object_span.to_string(), f.relation_id.clone()];
            if f.fold.is_some() {
                fields.push(fold);
            }
            format!("{}\n", tsv::join(fields))
        })
        .collect()
}

pub fn read_gold(path: &Path) -> Result<Vec<GoldFact>, TsvError> {
    let text = std::fs::read_to_string(path).map_err(|source| TsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_gold(&text, &path.display().to_string())
}

/// Check that every fact names a known sentence and lies inside it.
pub fn validate_gold(g: &Graph, facts: &[GoldFact]) -> Result<(), SuperviseError> {
    for (index, f) in facts.iter().enumerate() {
        let err = |message: String| SuperviseError::Gold {
            index,
            sentence: f.sentence_id.clone(),
            message,
        };
        let s = g.sentence_by_key(&f.sentence_id).ok_or_else(|| err("unknown sentence".into()))?;
        let span = g.sentence(s).map(|p| p.char_span).ok_or_else(|| err("unknown sentence".into()))?;
        for (what, sp) in [("subject", f.subject_span), ("object", f.object_span)] {
            if sp.is_empty() || !span.contains(&sp) {
                return Err(err(format!("{what} span {sp} outside sentence span {span}")));
            }
        }
    }
    Ok(())
}

/// The argument spans a clause can be matched by.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignCandidate {
    pub clause: VertexId,
    pub clause_key: String,
    /// The subject mention's span, then its coreference antecedent's span.
    pub subject_spans: Vec<Span>,
    pub object_spans: Vec<Span>,
}

/// Candidate of `clause`, if it has exactly one resolving subject and object mention.
pub fn candidate(g: &Graph, clause: VertexId) -> Option<AlignCandidate> {
    let spans = |role| -> Option<Vec<Span>> {
        let (m, _) = unique_role_entity(g, clause, role).ok()??;
        let mut out = vec![g.mention(m)?.char_span];
        let r = g.resolve_mention(m)?;
        if r.via_coref {
            out.push(g.mention(r.linked_mention)?.char_span);
        }
        Some(out)
    };
    Some(AlignCandidate {
        clause,
        clause_key: g.clause_key(clause)?,
        subject_spans: spans(SyntacticRole::Subject)?,
        object_spans: spans(SyntacticRole::Object)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabeledClause {
    pub clause_id: VertexId,
    pub clause_key: String,
    pub relation_id: String,
    /// Index of the matched fact in the gold list.
    pub fact: usize,
}

/// Whether `c` carries fact `f`: subject against subject and object against
/// object, never swapped.
pub fn matches(c: &AlignCandidate, f: &GoldFact, m: SpanMatch) -> bool {
    c.subject_spans.iter().any(|s| m.matches(s, &f.subject_span)) && c.object_spans.iter().any(|o| m.matches(o, &f.object_span))
}

/// Label `candidates` with every fact in `facts` they match. The output is
/// sorted, so it does not depend on input order.
pub fn align(facts: &[(usize, &GoldFact)], candidates: &[AlignCandidate], m: SpanMatch) -> Vec<LabeledClause> {
    let mut out = Vec::new();
    for c in candidates {
        for &(i, f) in facts {
            if matches(c, f, m) {
                out.push(LabeledClause {
                    clause_id: c.clause,
                    clause_key: c.clause_key.clone(),
                    relation_id: f.relation_id.clone(),
                    fact: i,
                });
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Align every gold sentence of `g` against its clauses.
pub fn align_graph(g: &Graph, facts: &[GoldFact], m: SpanMatch) -> Result<Vec<LabeledClause>, SuperviseError> {
    validate_gold(g, facts)?;
    let mut by_sentence: BTreeMap<&str, Vec<(usize, &GoldFact)>> = BTreeMap::new();
    for (i, f) in facts.iter().enumerate() {
        by_sentence.entry(&f.sentence_id).or_default().push((i, f));
    }
    let mut out = Vec::new();
    for (key, fs) in by_sentence {
        let Some(s) = g.sentence_by_key(key) else { continue };
        let candidates: Vec<_> = g.sentence_clauses(s).into_iter().filter_map(|c| candidate(g, c)).collect();
        out.extend(align(&fs, &candidates, m));
    }
    out.sort();
    Ok(out)
}

/// Readable clause text: subject, predicate, object and adverbials.
pub fn clause_surface(g: &Graph, clause: VertexId) -> String {
    let (Some(c), Some(text)) = (g.clause(clause), g.clause_text(clause)) else {
        return String::new();
    };
    let mut parts = vec![c.subject_span.slice(text).unwrap_or_default(), c.predicate_text.as_str()];
    parts.extend(c.object_span.and_then(|o| o.slice(text)));
    parts.extend(c.adverbial_spans.iter().filter_map(|a| a.slice(text)));
    parts.join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TrainingRecord {
    pub clause_key: String,
    pub sentence_key: String,
    pub text: String,
    pub relation_id: String,
}

/// `(clause text, relation)` records for clauses outside `holdout` sentences.
pub fn emit_training_set(g: &Graph, labeled: &[LabeledClause], holdout: &HashSet<String>) -> Vec<TrainingRecord> {
    labeled
        .iter()
        .filter_map(|l| {
            let sentence_key = g.sentence_key(g.clause_sentence(l.clause_id)?)?;
            (!holdout.contains(&sentence_key)).then(|| TrainingRecord {
                clause_key: l.clause_key.clone(),
                sentence_key,
                text: clause_surface(g, l.clause_id),
                relation_id: l.relation_id.clone(),
            })
        })
        .collect()
}

/// Draw up to `n` distinct gold sentences per relation with a seeded RNG.
pub fn sample_per_relation(facts: &[GoldFact], n: usize, seed: u64) -> BTreeMap<String, Vec<String>> {
    let mut by_rel: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for f in facts {
        by_rel.entry(&f.relation_id).or_default().insert(&f.sentence_id);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    by_rel
        .into_iter()
        .map(|(rel, sents)| {
            let pool: Vec<&str> = sents.into_iter().collect();
            let mut picked: Vec<String> = pool.choose_multiple(&mut rng, n.min(pool.len())).map(|s| s.to_string()).collect();
            picked.sort();
            (rel.to_string(), picked)
        })
        .collect()
}

const LABELED_HEADER: &str = "#clause\tclause_key\trelation_id\tfact_index";

pub fn format_labeled(labeled: &[LabeledClause]) -> String {
    let mut out = format!("{LABELED_HEADER}\n");
    for l in labeled {
        out.push_str(&tsv::join([l.clause_id.to_string(), l.clause_key.clone(), l.relation_id.clone(), l.fact.to_string()]));
        out.push('\n');
    }
    out
}

pub fn parse_labeled(text: &str, origin: &str) -> Result<Vec<LabeledClause>, TsvError> {
    tsv::parse_rows(text, origin, 4, 4)?
        .into_iter()
        .map(|r| {
            let bad = |m: String| tsv::row_error(origin, &r, m);
            Ok(LabeledClause {
                clause_id: r.field(0).parse().map_err(bad)?,
                clause_key: r.field(1).to_string(),
                relation_id: r.field(2).to_string(),
                fact: r.field(3).parse().map_err(|_| tsv::row_error(origin, &r, "bad fact index"))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests;

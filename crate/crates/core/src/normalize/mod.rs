//! Distilling clauses into binary relations between linked entities.
//!
//! A clause yields a [`NormalizedTriple`] when exactly one subject mention
//! and exactly one object mention resolve to entities (directly or through
//! one coreference hop), the two entities differ, and the predicate matches
//! the `verb | verb + particle` pattern.

mod bigram;
mod predicate;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graph::{Graph, SyntacticRole, VertexId};
use crate::tsv::{self, TsvError};

pub use bigram::{promote_bigrams, BigramTable};
pub use predicate::{extract_predicate, extract_predicate_with, pos_class, PosClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Voice {
    Active,
    Passive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Composition,
    Bigram,
}

macro_rules! str_enum {
    ($t:ty { $($v:ident => $s:literal),* }) => {
        impl $t {
            pub fn as_str(self) -> &'static str {
                match self { $(Self::$v => $s),* }
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($s => Ok(Self::$v),)*
                    _ => Err(format!("unknown {} `{s}`", stringify!($t).to_lowercase())),
                }
            }
        }
    };
}

str_enum!(Voice { Active => "active", Passive => "passive" });
str_enum!(Encoding { Composition => "composition", Bigram => "bigram" });

/// A normalized `verb` or `verb + particle` predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PredicateForm {
    /// Lemma, or the participle itself for passives.
    pub verb: String,
    pub particle: Option<String>,
    pub voice: Voice,
    pub encoding: Encoding,
    /// `verb_particle`, present iff `encoding` is bigram.
    pub bigram_token: Option<String>,
}

impl PredicateForm {
    pub fn new(verb: impl Into<String>, particle: Option<String>, voice: Voice) -> Self {
        PredicateForm {
            verb: verb.into(),
            particle,
            voice,
            encoding: Encoding::Composition,
            bigram_token: None,
        }
    }

    /// The `verb_particle` token this predicate would use as a bigram.
    pub fn bigram_key(&self) -> Option<String> {
        self.particle.as_ref().map(|p| format!("{}_{}", self.verb, p))
    }

    /// Switch to bigram encoding when the table retains this pair, else to
    /// composition.
    pub fn apply_table(&mut self, table: &BigramTable) {
        match self.bigram_key().filter(|k| table.contains(k)) {
            Some(k) => {
                self.encoding = Encoding::Bigram;
                self.bigram_token = Some(k);
            }
            None => {
                self.encoding = Encoding::Composition;
                self.bigram_token = None;
            }
        }
    }

    /// Predicate tokens under `table`: one bigram token or `verb [particle]`.
    pub fn tokens(&self, table: &BigramTable) -> Vec<String> {
        match self.bigram_key().filter(|k| table.contains(k)) {
            Some(k) => vec![k],
            None => std::iter::once(self.verb.clone()).chain(self.particle.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NormalizedTriple {
    pub subject_kb_id: String,
    pub predicate: PredicateForm,
    pub object_kb_id: String,
    pub source_clause: VertexId,
    pub clause_key: String,
    /// Surface of the subject mention as it appears in the clause.
    pub subject_surface: String,
    pub object_surface: String,
}

/// Why a clause produced no triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rejection {
    NoSubjectEntity,
    AmbiguousSubject,
    NoObjectEntity,
    AmbiguousObject,
    NonVerbalPredicate,
    Reflexive,
}

impl Rejection {
    pub fn as_str(self) -> &'static str {
        match self {
            Rejection::NoSubjectEntity => "no_subject_entity",
            Rejection::AmbiguousSubject => "ambiguous_subject",
            Rejection::NoObjectEntity => "no_object_entity",
            Rejection::AmbiguousObject => "ambiguous_object",
            Rejection::NonVerbalPredicate => "non_verbal_predicate",
            Rejection::Reflexive => "reflexive",
        }
    }
}

/// Counts from distilling a whole graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DistillReport {
    pub clauses: usize,
    pub distilled: usize,
    pub rejected: BTreeMap<Rejection, usize>,
}

impl DistillReport {
    pub fn reflexive_dropped(&self) -> usize {
        self.rejected.get(&Rejection::Reflexive).copied().unwrap_or(0)
    }

    /// Reflexive drops over clauses that otherwise qualified.
    pub fn reflexive_fraction(&self) -> f64 {
        let r = self.reflexive_dropped();
        if r + self.distilled == 0 {
            0.0
        } else {
            r as f64 / (r + self.distilled) as f64
        }
    }
}

impl fmt::Display for DistillReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "clauses\t{}", self.clauses)?;
        writeln!(f, "distilled\t{}", self.distilled)?;
        for (r, n) in &self.rejected {
            writeln!(f, "rejected.{}\t{n}", r.as_str())?;
        }
        Ok(())
    }
}

/// More than one mention in a role resolves to an entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ambiguous;

/// The single entity-resolving mention of `clause` in `role`.
///
/// Returns the mention and the kb id it resolves to, `Ok(None)` when no
/// mention resolves, and `Err(Ambiguous)` when more than one does.
pub fn unique_role_entity(g: &Graph, clause: VertexId, role: SyntacticRole) -> Result<Option<(VertexId, VertexId)>, Ambiguous> {
    let mut found = None;
    for m in g.clause_role_mentions(clause, role) {
        if let Some(r) = g.resolve_mention(m) {
            if found.is_some() {
                return Err(Ambiguous);
            }
            found = Some((m, r.entity));
        }
    }
    Ok(found)
}

/// Distill one clause, reporting why it was rejected.
pub fn distill_checked(g: &Graph, clause: VertexId) -> Result<NormalizedTriple, Rejection> {
    let (sm, se) = unique_role_entity(g, clause, SyntacticRole::Subject)
        .map_err(|Ambiguous| Rejection::AmbiguousSubject)?
        .ok_or(Rejection::NoSubjectEntity)?;
    let (om, oe) = unique_role_entity(g, clause, SyntacticRole::Object)
        .map_err(|Ambiguous| Rejection::AmbiguousObject)?
        .ok_or(Rejection::NoObjectEntity)?;
    let props = g.clause(clause).ok_or(Rejection::NonVerbalPredicate)?;
    let sent = g.clause_sentence(clause).and_then(|s| g.sentence(s)).ok_or(Rejection::NonVerbalPredicate)?;
    let predicate =
        extract_predicate(&sent.tokens, &props.predicate_token_indices).ok_or(Rejection::NonVerbalPredicate)?;
    let kb = |e| g.entity(e).map(|p| p.kb_id.clone()).unwrap_or_default();
    let (subject_kb_id, object_kb_id) = (kb(se), kb(oe));
    if subject_kb_id == object_kb_id {
        return Err(Rejection::Reflexive);
    }
    let surface = |m| g.mention(m).map(|p| p.surface.clone()).unwrap_or_default();
    Ok(NormalizedTriple {
        subject_kb_id,
        predicate,
        object_kb_id,
        source_clause: clause,
        clause_key: g.clause_key(clause).unwrap_or_default(),
        subject_surface: surface(sm),
        object_surface: surface(om),
    })
}

pub fn distill(g: &Graph, clause: VertexId) -> Option<NormalizedTriple> {
    distill_checked(g, clause).ok()
}

/// Distill every clause of `g` in clause order.
pub fn distill_graph(g: &Graph) -> (Vec<NormalizedTriple>, DistillReport) {
    let mut report = DistillReport::default();
    let mut out = Vec::new();
    for c in g.clause_ids() {
        report.clauses += 1;
        match distill_checked(g, c) {
            Ok(t) => {
                report.distilled += 1;
                out.push(t);
            }
            Err(r) => *report.rejected.entry(r).or_default() += 1,
        }
    }
    (out, report)
}

/// Lowercase, whitespace-split, punctuation-trimmed tokens of a surface.
pub fn surface_tokens(surface: &str) -> Vec<String> {
    surface
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Training sequence for a triple: subject tokens, predicate token(s), object tokens.
pub fn encode_tokens(triple: &NormalizedTriple, table: &BigramTable) -> Vec<String> {
    let mut out = surface_tokens(&triple.subject_surface);
    out.extend(triple.predicate.tokens(table));
    out.extend(surface_tokens(&triple.object_surface));
    out
}

const TRIPLE_FIELDS: usize = 11;
const TRIPLE_HEADER: &str = "#clause\tclause_key\tsubject_kb_id\tsubject_surface\tverb\tparticle\tvoice\tencoding\tbigram_token\tobject_kb_id\tobject_surface";

/// Triples as TSV, one per line, with a `#` header naming the fields.
pub fn format_triples(triples: &[NormalizedTriple]) -> String {
    let mut out = String::from(TRIPLE_HEADER);
    out.push('\n');
    for t in triples {
        let p = &t.predicate;
        out.push_str(&tsv::join([
            t.source_clause.to_string().as_str(),
            &t.clause_key,
            &t.subject_kb_id,
            &t.subject_surface,
            &p.verb,
            p.particle.as_deref().unwrap_or(""),
            p.voice.as_str(),
            p.encoding.as_str(),
            p.bigram_token.as_deref().unwrap_or(""),
            &t.object_kb_id,
            &t.object_surface,
        ]));
        out.push('\n');
    }
    out
}

pub fn parse_triples(text: &str, origin: &str) -> Result<Vec<NormalizedTriple>, TsvError> {
    let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
    tsv::parse_rows(text, origin, TRIPLE_FIELDS, TRIPLE_FIELDS)?
        .into_iter()
        .map(|r| {
            let bad = |m: String| tsv::row_error(origin, &r, m);
            let predicate = PredicateForm {
                verb: r.field(4).to_string(),
                particle: opt(r.field(5)),
                voice: r.field(6).parse().map_err(bad)?,
                encoding: r.field(7).parse().map_err(bad)?,
                bigram_token: opt(r.field(8)),
            };
            if predicate.verb.is_empty() {
                return Err(bad("empty verb".into()));
            }
            Ok(NormalizedTriple {
                source_clause: r.field(0).parse().map_err(bad)?,
                clause_key: r.field(1).to_string(),
                subject_kb_id: r.field(2).to_string(),
                subject_surface: r.field(3).to_string(),
                predicate,
                object_kb_id: r.field(9).to_string(),
                object_surface: r.field(10).to_string(),
            })
        })
        .collect()
}

pub fn write_triples(path: &Path, triples: &[NormalizedTriple]) -> Result<(), TsvError> {
    tsv::write_file(path, &format_triples(triples))
}

pub fn read_triples(path: &Path) -> Result<Vec<NormalizedTriple>, TsvError> {
    let text = std::fs::read_to_string(path).map_err(|source| TsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_triples(&text, &path.display().to_string())
}

//! In-memory property graph over documents, sentences, clauses, mentions and
//! entities.
//!
//! Vertices live in dense per-kind arrays; a [`VertexId`] is a kind plus an
//! ordinal into that array. Hierarchy edges (document → sentence → clause →
//! mention) are created by the `attach_*` calls, entity edges by
//! [`Graph::link_entity`] and mention-to-mention coreference edges by
//! [`Graph::add_coref_link`].
//!
//! Construction is single-writer. After [`Graph::freeze`] every mutating call
//! fails with [`GraphError::Frozen`]; the graph holds no interior mutability
//! and can be shared across threads for reading.

mod snapshot;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::span::Span;

pub use snapshot::{read_snapshot, write_snapshot, SnapshotError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Document,
    Sentence,
    Clause,
    Mention,
    Entity,
}

impl VertexKind {
    pub const ALL: [VertexKind; 5] = [
        VertexKind::Document,
        VertexKind::Sentence,
        VertexKind::Clause,
        VertexKind::Mention,
        VertexKind::Entity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VertexKind::Document => "document",
            VertexKind::Sentence => "sentence",
            VertexKind::Clause => "clause",
            VertexKind::Mention => "mention",
            VertexKind::Entity => "entity",
        }
    }
}

impl fmt::Display for VertexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VertexKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VertexKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown vertex kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId {
    pub kind: VertexKind,
    pub ordinal: u32,
}

impl VertexId {
    pub const fn new(kind: VertexKind, ordinal: u32) -> Self {
        VertexId { kind, ordinal }
    }

    pub const fn document(ordinal: u32) -> Self {
        Self::new(VertexKind::Document, ordinal)
    }

    pub const fn sentence(ordinal: u32) -> Self {
        Self::new(VertexKind::Sentence, ordinal)
    }

    pub const fn clause(ordinal: u32) -> Self {
        Self::new(VertexKind::Clause, ordinal)
    }

    pub const fn mention(ordinal: u32) -> Self {
        Self::new(VertexKind::Mention, ordinal)
    }

    pub const fn entity(ordinal: u32) -> Self {
        Self::new(VertexKind::Entity, ordinal)
    }

    fn index(self) -> usize {
        self.ordinal as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.kind, self.ordinal)
    }
}

impl FromStr for VertexId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, n) = s.split_once('#').ok_or_else(|| format!("bad vertex id `{s}`"))?;
        let ordinal = n.parse().map_err(|_| format!("bad vertex id `{s}`"))?;
        Ok(VertexId::new(kind.parse()?, ordinal))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DocumentProps {
    pub title: String,
    pub source_url: Option<String>,
    pub timestamp: Option<String>,
    pub external_id: String,
}

/// One token of a sentence, spans in document byte offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub span: Span,
    /// Surface text, equal to the document slice at `span`.
    pub text: String,
    pub pos: String,
    pub lemma: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceProps {
    pub text: String,
    pub index_in_doc: u32,
    pub char_span: Span,
    /// Tokens with POS tag and lemma; clause predicates index into this list.
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseProps {
    pub subject_span: Span,
    pub predicate_text: String,
    pub predicate_token_indices: Vec<usize>,
    pub object_span: Option<Span>,
    pub adverbial_spans: Vec<Span>,
    pub index_in_sentence: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntacticRole {
    Subject,
    Object,
    Other,
}

impl SyntacticRole {
    pub fn as_str(self) -> &'static str {
        match self {
            SyntacticRole::Subject => "subject",
            SyntacticRole::Object => "object",
            SyntacticRole::Other => "other",
        }
    }
}

impl FromStr for SyntacticRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "subject" => Ok(SyntacticRole::Subject),
            "object" => Ok(SyntacticRole::Object),
            "other" => Ok(SyntacticRole::Other),
            _ => Err(format!("unknown syntactic role `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum NerType {
    #[serde(rename = "PER")]
    Per,
    #[serde(rename = "ORG")]
    Org,
    #[serde(rename = "LOC")]
    Loc,
    #[serde(rename = "MISC")]
    Misc,
    #[default]
    #[serde(rename = "none")]
    None,
}

impl NerType {
    pub fn as_str(self) -> &'static str {
        match self {
            NerType::Per => "PER",
            NerType::Org => "ORG",
            NerType::Loc => "LOC",
            NerType::Misc => "MISC",
            NerType::None => "none",
        }
    }
}

impl FromStr for NerType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "PER" => Ok(NerType::Per),
            "ORG" => Ok(NerType::Org),
            "LOC" => Ok(NerType::Loc),
            "MISC" => Ok(NerType::Misc),
            "none" => Ok(NerType::None),
            _ => Err(format!("unknown NER type `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionProps {
    pub surface: String,
    pub char_span: Span,
    pub pos: String,
    pub lemma: String,
    pub syntactic_role: SyntacticRole,
    pub ner_type: NerType,
    pub source_annotator: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityProps {
    pub kb_id: String,
    pub canonical_name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    DocHasSentence,
    SentenceHasClause,
    ClauseHasMention,
    MentionRefersToEntity,
    CorefLink,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 5] = [
        EdgeKind::DocHasSentence,
        EdgeKind::SentenceHasClause,
        EdgeKind::ClauseHasMention,
        EdgeKind::MentionRefersToEntity,
        EdgeKind::CorefLink,
    ];

    /// Required (source, target) vertex kinds.
    pub fn endpoints(self) -> (VertexKind, VertexKind) {
        match self {
            EdgeKind::DocHasSentence => (VertexKind::Document, VertexKind::Sentence),
            EdgeKind::SentenceHasClause => (VertexKind::Sentence, VertexKind::Clause),
            EdgeKind::ClauseHasMention => (VertexKind::Clause, VertexKind::Mention),
            EdgeKind::MentionRefersToEntity => (VertexKind::Mention, VertexKind::Entity),
            EdgeKind::CorefLink => (VertexKind::Mention, VertexKind::Mention),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::DocHasSentence => "doc_has_sentence",
            EdgeKind::SentenceHasClause => "sentence_has_clause",
            EdgeKind::ClauseHasMention => "clause_has_mention",
            EdgeKind::MentionRefersToEntity => "mention_refers_to_entity",
            EdgeKind::CorefLink => "coref_link",
        }
    }
}

impl FromStr for EdgeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EdgeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown edge kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub src: VertexId,
    pub dst: VertexId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraphStats {
    pub documents: usize,
    pub sentences: usize,
    pub clauses: usize,
    pub mentions: usize,
    pub entities: usize,
}

impl fmt::Display for GraphStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "documents\t{}", self.documents)?;
        writeln!(f, "sentences\t{}", self.sentences)?;
        writeln!(f, "clauses\t{}", self.clauses)?;
        writeln!(f, "mentions\t{}", self.mentions)?;
        write!(f, "entities\t{}", self.entities)
    }
}

/// One edge of the fact subgraph: a clause whose subject and object both
/// resolve to entities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactRecord {
    pub subject_mention: VertexId,
    pub subject_entity: VertexId,
    pub predicate: String,
    pub object_mention: VertexId,
    pub object_entity: VertexId,
    pub clause: VertexId,
}

/// A mention resolved to an entity, possibly through one coreference hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    /// The mention carrying the entity link (the input mention or its antecedent).
    pub linked_mention: VertexId,
    pub entity: VertexId,
    pub via_coref: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("a document with external id `{0}` already exists")]
    DuplicateDocument(String),
    #[error("vertex {0} does not exist")]
    MissingVertex(VertexId),
    #[error("expected a {expected} vertex, got {got}")]
    WrongKind { expected: VertexKind, got: VertexId },
    #[error("{what} span {span} is empty or outside {bounds}")]
    SpanOutOfBounds {
        what: &'static str,
        span: Span,
        bounds: Span,
    },
    #[error("{what} at {span} reads `{found}` in the document, not `{expected}`")]
    SpanMismatch {
        what: &'static str,
        span: Span,
        expected: String,
        found: String,
    },
    #[error("sentence span {span} overlaps an existing sentence of the same document")]
    SentenceOverlap { span: Span },
    #[error("sentence tokens must be non-empty, ordered and non-overlapping (token {index})")]
    BadToken { index: usize },
    #[error("predicate text is empty")]
    EmptyPredicate,
    #[error("predicate token index {index} is outside the sentence's {len} tokens")]
    PredicateTokenOutOfRange { index: usize, len: usize },
    #[error("coreference link from {0} to itself")]
    SelfLink(VertexId),
    #[error("mention {mention} is already linked to `{existing}`")]
    MentionAlreadyLinked { mention: VertexId, existing: String },
    #[error("the graph is frozen")]
    Frozen,
}

#[derive(Debug, Clone)]
struct DocumentVertex {
    props: DocumentProps,
    text: String,
    sentences: Vec<u32>,
}

#[derive(Debug, Clone)]
struct SentenceVertex {
    props: SentenceProps,
    document: u32,
    clauses: Vec<u32>,
}

#[derive(Debug, Clone)]
struct ClauseVertex {
    props: ClauseProps,
    sentence: u32,
    mentions: Vec<u32>,
}

#[derive(Debug, Clone)]
struct MentionVertex {
    props: MentionProps,
    clause: u32,
    entity: Option<u32>,
    coref: Vec<u32>,
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    documents: Vec<DocumentVertex>,
    sentences: Vec<SentenceVertex>,
    clauses: Vec<ClauseVertex>,
    mentions: Vec<MentionVertex>,
    entities: Vec<EntityProps>,
    entity_index: HashMap<String, u32>,
    document_index: HashMap<String, u32>,
    edges: Vec<Edge>,
    edge_set: HashSet<Edge>,
    frozen: bool,
}

fn check_span(what: &'static str, span: Span, bounds: Span, text: &str) -> Result<(), GraphError> {
    if span.is_empty() || !bounds.contains(&span) || span.slice(text).is_none() {
        return Err(GraphError::SpanOutOfBounds { what, span, bounds });
    }
    Ok(())
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    fn writable(&self) -> Result<(), GraphError> {
        if self.frozen {
            Err(GraphError::Frozen)
        } else {
            Ok(())
        }
    }

    fn expect(&self, id: VertexId, kind: VertexKind) -> Result<(), GraphError> {
        if id.kind != kind {
            return Err(GraphError::WrongKind { expected: kind, got: id });
        }
        let len = match kind {
            VertexKind::Document => self.documents.len(),
            VertexKind::Sentence => self.sentences.len(),
            VertexKind::Clause => self.clauses.len(),
            VertexKind::Mention => self.mentions.len(),
            VertexKind::Entity => self.entities.len(),
        };
        if id.index() >= len {
            return Err(GraphError::MissingVertex(id));
        }
        Ok(())
    }

    fn push_edge(&mut self, edge: Edge) -> bool {
        if self.edge_set.insert(edge) {
            self.edges.push(edge);
            true
        } else {
            false
        }
    }

    pub fn add_document(&mut self, props: DocumentProps, text: impl Into<String>) -> Result<VertexId, GraphError> {
        self.writable()?;
        if self.document_index.contains_key(&props.external_id) {
            return Err(GraphError::DuplicateDocument(props.external_id));
        }
        let ordinal = self.documents.len() as u32;
        self.document_index.insert(props.external_id.clone(), ordinal);
        self.documents.push(DocumentVertex {
            props,
            text: text.into(),
            sentences: Vec::new(),
        });
        Ok(VertexId::document(ordinal))
    }

    pub fn attach_sentence(&mut self, doc: VertexId, props: SentenceProps) -> Result<VertexId, GraphError> {
        self.writable()?;
        self.expect(doc, VertexKind::Document)?;
        let dv = &self.documents[doc.index()];
        let whole = Span::new(0, dv.text.len());
        check_span("sentence", props.char_span, whole, &dv.text)?;
        let found = props.char_span.slice(&dv.text).unwrap_or_default();
        if found != props.text {
            return Err(GraphError::SpanMismatch {
                what: "sentence",
                span: props.char_span,
                expected: props.text,
                found: found.to_string(),
            });
        }
        if dv
            .sentences
            .iter()
            .any(|&s| self.sentences[s as usize].props.char_span.overlaps(&props.char_span))
        {
            return Err(GraphError::SentenceOverlap { span: props.char_span });
        }
        let mut prev_end = props.char_span.start;
        for (index, tok) in props.tokens.iter().enumerate() {
            if tok.span.is_empty()
                || !props.char_span.contains(&tok.span)
                || tok.span.start < prev_end
                || tok.span.slice(&dv.text) != Some(tok.text.as_str())
            {
                return Err(GraphError::BadToken { index });
            }
            prev_end = tok.span.end;
        }
        let ordinal = self.sentences.len() as u32;
        self.documents[doc.index()].sentences.push(ordinal);
        self.sentences.push(SentenceVertex {
            props,
            document: doc.ordinal,
            clauses: Vec::new(),
        });
        let id = VertexId::sentence(ordinal);
        self.push_edge(Edge {
            src: doc,
            dst: id,
            kind: EdgeKind::DocHasSentence,
        });
        Ok(id)
    }

    pub fn attach_clause(&mut self, sent: VertexId, props: ClauseProps) -> Result<VertexId, GraphError> {
        self.writable()?;
        self.expect(sent, VertexKind::Sentence)?;
        let sv = &self.sentences[sent.index()];
        let text = &self.documents[sv.document as usize].text;
        let bounds = sv.props.char_span;
        check_span("subject", props.subject_span, bounds, text)?;
        if let Some(obj) = props.object_span {
            check_span("object", obj, bounds, text)?;
        }
        for adv in &props.adverbial_spans {
            check_span("adverbial", *adv, bounds, text)?;
        }
        if props.predicate_text.trim().is_empty() {
            return Err(GraphError::EmptyPredicate);
        }
        let len = sv.props.tokens.len();
        if let Some(&index) = props.predicate_token_indices.iter().find(|&&i| i >= len) {
            return Err(GraphError::PredicateTokenOutOfRange { index, len });
        }
        let ordinal = self.clauses.len() as u32;
        self.sentences[sent.index()].clauses.push(ordinal);
        self.clauses.push(ClauseVertex {
            props,
            sentence: sent.ordinal,
            mentions: Vec::new(),
        });
        let id = VertexId::clause(ordinal);
        self.push_edge(Edge {
            src: sent,
            dst: id,
            kind: EdgeKind::SentenceHasClause,
        });
        Ok(id)
    }

    pub fn attach_mention(&mut self, clause: VertexId, props: MentionProps) -> Result<VertexId, GraphError> {
        self.writable()?;
        self.expect(clause, VertexKind::Clause)?;
        let sv = &self.sentences[self.clauses[clause.index()].sentence as usize];
        let text = &self.documents[sv.document as usize].text;
        check_span("mention", props.char_span, sv.props.char_span, text)?;
        let found = props.char_span.slice(text).unwrap_or_default();
        if found != props.surface {
            return Err(GraphError::SpanMismatch {
                what: "mention",
                span: props.char_span,
                expected: props.surface,
                found: found.to_string(),
            });
        }
        let ordinal = self.mentions.len() as u32;
        self.clauses[clause.index()].mentions.push(ordinal);
        self.mentions.push(MentionVertex {
            props,
            clause: clause.ordinal,
            entity: None,
            coref: Vec::new(),
        });
        let id = VertexId::mention(ordinal);
        self.push_edge(Edge {
            src: clause,
            dst: id,
            kind: EdgeKind::ClauseHasMention,
        });
        Ok(id)
    }

    fn ensure_entity(&mut self, kb_id: &str, canonical_name: &str) -> u32 {
        if let Some(&e) = self.entity_index.get(kb_id) {
            return e;
        }
        let ordinal = self.entities.len() as u32;
        self.entities.push(EntityProps {
            kb_id: kb_id.to_string(),
            canonical_name: canonical_name.to_string(),
        });
        self.entity_index.insert(kb_id.to_string(), ordinal);
        ordinal
    }

    /// Link a mention to the entity `kb_id`, creating the entity on first use.
    pub fn link_entity(&mut self, mention: VertexId, kb_id: &str, canonical_name: &str) -> Result<VertexId, GraphError> {
        self.writable()?;
        self.expect(mention, VertexKind::Mention)?;
        if let Some(existing) = self.mentions[mention.index()].entity {
            let existing = &self.entities[existing as usize].kb_id;
            if existing == kb_id {
                return Ok(VertexId::entity(self.entity_index[kb_id]));
            }
            return Err(GraphError::MentionAlreadyLinked {
                mention,
                existing: existing.clone(),
            });
        }
        let e = self.ensure_entity(kb_id, canonical_name);
        self.mentions[mention.index()].entity = Some(e);
        let entity = VertexId::entity(e);
        self.push_edge(Edge {
            src: mention,
            dst: entity,
            kind: EdgeKind::MentionRefersToEntity,
        });
        Ok(entity)
    }

    /// Store an undirected coreference link as the single edge (min, max).
    pub fn add_coref_link(&mut self, m1: VertexId, m2: VertexId) -> Result<Edge, GraphError> {
        self.writable()?;
        self.expect(m1, VertexKind::Mention)?;
        self.expect(m2, VertexKind::Mention)?;
        if m1 == m2 {
            return Err(GraphError::SelfLink(m1));
        }
        let (src, dst) = if m1 < m2 { (m1, m2) } else { (m2, m1) };
        let edge = Edge {
            src,
            dst,
            kind: EdgeKind::CorefLink,
        };
        if self.push_edge(edge) {
            self.mentions[src.index()].coref.push(dst.ordinal);
            self.mentions[dst.index()].coref.push(src.ordinal);
        }
        Ok(edge)
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            documents: self.documents.len(),
            sentences: self.sentences.len(),
            clauses: self.clauses.len(),
            mentions: self.mentions.len(),
            entities: self.entities.len(),
        }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_edge(&self, edge: &Edge) -> bool {
        self.edge_set.contains(edge)
    }

    // --- reads -----------------------------------------------------------

    pub fn document_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.documents.len() as u32).map(VertexId::document)
    }

    pub fn sentence_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.sentences.len() as u32).map(VertexId::sentence)
    }

    pub fn clause_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.clauses.len() as u32).map(VertexId::clause)
    }

    pub fn mention_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.mentions.len() as u32).map(VertexId::mention)
    }

    pub fn entity_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.entities.len() as u32).map(VertexId::entity)
    }

    pub fn document(&self, id: VertexId) -> Option<&DocumentProps> {
        self.expect(id, VertexKind::Document).ok()?;
        Some(&self.documents[id.index()].props)
    }

    pub fn document_text(&self, id: VertexId) -> Option<&str> {
        self.expect(id, VertexKind::Document).ok()?;
        Some(&self.documents[id.index()].text)
    }

    pub fn document_by_external_id(&self, external_id: &str) -> Option<VertexId> {
        self.document_index.get(external_id).map(|&d| VertexId::document(d))
    }

    pub fn document_sentences(&self, id: VertexId) -> Vec<VertexId> {
        match self.expect(id, VertexKind::Document) {
            Ok(()) => self.documents[id.index()]
                .sentences
                .iter()
                .map(|&s| VertexId::sentence(s))
                .collect(),
            Err(_) => Vec::new(),
        }
    }

    pub fn sentence(&self, id: VertexId) -> Option<&SentenceProps> {
        self.expect(id, VertexKind::Sentence).ok()?;
        Some(&self.sentences[id.index()].props)
    }

    pub fn sentence_document(&self, id: VertexId) -> Option<VertexId> {
        self.expect(id, VertexKind::Sentence).ok()?;
        Some(VertexId::document(self.sentences[id.index()].document))
    }

    pub fn sentence_clauses(&self, id: VertexId) -> Vec<VertexId> {
        match self.expect(id, VertexKind::Sentence) {
            Ok(()) => self.sentences[id.index()]
                .clauses
                .iter()
                .map(|&c| VertexId::clause(c))
                .collect(),
            Err(_) => Vec::new(),
        }
    }

    pub fn clause(&self, id: VertexId) -> Option<&ClauseProps> {
        self.expect(id, VertexKind::Clause).ok()?;
        Some(&self.clauses[id.index()].props)
    }

    pub fn clause_sentence(&self, id: VertexId) -> Option<VertexId> {
        self.expect(id, VertexKind::Clause).ok()?;
        Some(VertexId::sentence(self.clauses[id.index()].sentence))
    }

    pub fn clause_mentions(&self, id: VertexId) -> Vec<VertexId> {
        match self.expect(id, VertexKind::Clause) {
            Ok(()) => self.clauses[id.index()]
                .mentions
                .iter()
                .map(|&m| VertexId::mention(m))
                .collect(),
            Err(_) => Vec::new(),
        }
    }

    /// Text of the clause's document, for slicing clause spans.
    pub fn clause_text(&self, id: VertexId) -> Option<&str> {
        let sent = self.clause_sentence(id)?;
        self.document_text(self.sentence_document(sent)?)
    }

    pub fn mention(&self, id: VertexId) -> Option<&MentionProps> {
        self.expect(id, VertexKind::Mention).ok()?;
        Some(&self.mentions[id.index()].props)
    }

    pub fn mention_clause(&self, id: VertexId) -> Option<VertexId> {
        self.expect(id, VertexKind::Mention).ok()?;
        Some(VertexId::clause(self.mentions[id.index()].clause))
    }

    pub fn mention_entity(&self, id: VertexId) -> Option<VertexId> {
        self.expect(id, VertexKind::Mention).ok()?;
        self.mentions[id.index()].entity.map(VertexId::entity)
    }

    /// Coreference neighbours in ascending ordinal order.
    pub fn coref_neighbors(&self, id: VertexId) -> Vec<VertexId> {
        if self.expect(id, VertexKind::Mention).is_err() {
            return Vec::new();
        }
        let mut out: Vec<u32> = self.mentions[id.index()].coref.clone();
        out.sort_unstable();
        out.into_iter().map(VertexId::mention).collect()
    }

    /// Transitive coreference cluster containing `id` (computed on demand).
    pub fn coref_cluster(&self, id: VertexId) -> BTreeSet<VertexId> {
        let mut seen = BTreeSet::new();
        if self.expect(id, VertexKind::Mention).is_err() {
            return seen;
        }
        let mut stack = vec![id.ordinal];
        while let Some(m) = stack.pop() {
            if seen.insert(VertexId::mention(m)) {
                stack.extend(self.mentions[m as usize].coref.iter().copied());
            }
        }
        seen
    }

    pub fn entity(&self, id: VertexId) -> Option<&EntityProps> {
        self.expect(id, VertexKind::Entity).ok()?;
        Some(&self.entities[id.index()])
    }

    pub fn entity_by_kb_id(&self, kb_id: &str) -> Option<VertexId> {
        self.entity_index.get(kb_id).map(|&e| VertexId::entity(e))
    }

    /// Mentions linked to `entity`, ascending.
    pub fn entity_mentions(&self, entity: VertexId) -> Vec<VertexId> {
        if self.expect(entity, VertexKind::Entity).is_err() {
            return Vec::new();
        }
        self.mentions
            .iter()
            .enumerate()
            .filter(|(_, m)| m.entity == Some(entity.ordinal))
            .map(|(i, _)| VertexId::mention(i as u32))
            .collect()
    }

    /// Resolve a mention to its entity directly or through at most one
    /// coreference hop to a linked mention (lowest ordinal first).
    pub fn resolve_mention(&self, id: VertexId) -> Option<Resolution> {
        self.expect(id, VertexKind::Mention).ok()?;
        if let Some(e) = self.mentions[id.index()].entity {
            return Some(Resolution {
                linked_mention: id,
                entity: VertexId::entity(e),
                via_coref: false,
            });
        }
        self.coref_neighbors(id).into_iter().find_map(|n| {
            self.mentions[n.index()].entity.map(|e| Resolution {
                linked_mention: n,
                entity: VertexId::entity(e),
                via_coref: true,
            })
        })
    }

    /// Mentions of `clause` in `role`, ascending.
    pub fn clause_role_mentions(&self, clause: VertexId, role: SyntacticRole) -> Vec<VertexId> {
        self.clause_mentions(clause)
            .into_iter()
            .filter(|&m| self.mentions[m.index()].props.syntactic_role == role)
            .collect()
    }

    /// Stable key `external_id#sentence_index` for a sentence.
    pub fn sentence_key(&self, id: VertexId) -> Option<String> {
        let s = self.sentence(id)?;
        let doc = self.document(self.sentence_document(id)?)?;
        Some(format!("{}#{}", doc.external_id, s.index_in_doc))
    }

    /// Stable key `external_id#sentence_index#clause_index` for a clause.
    pub fn clause_key(&self, id: VertexId) -> Option<String> {
        let c = self.clause(id)?;
        let sent = self.sentence_key(self.clause_sentence(id)?)?;
        Some(format!("{}#{}", sent, c.index_in_sentence))
    }

    pub fn sentence_by_key(&self, key: &str) -> Option<VertexId> {
        let (ext, idx) = key.rsplit_once('#')?;
        let idx: u32 = idx.parse().ok()?;
        let doc = self.document_by_external_id(ext)?;
        self.documents[doc.index()]
            .sentences
            .iter()
            .map(|&s| VertexId::sentence(s))
            .find(|&s| self.sentences[s.index()].props.index_in_doc == idx)
    }

    /// Facts whose subject and object mentions both resolve to entities,
    /// optionally restricted to clauses touching one of `entity_filter`.
    pub fn fact_subgraph(&self, entity_filter: Option<&HashSet<String>>) -> Vec<FactRecord> {
        let mut out = Vec::new();
        for clause in self.clause_ids() {
            let first_resolved = |role| {
                self.clause_role_mentions(clause, role)
                    .into_iter()
                    .find_map(|m| self.resolve_mention(m).map(|r| (m, r.entity)))
            };
            let (Some((sm, se)), Some((om, oe))) =
                (first_resolved(SyntacticRole::Subject), first_resolved(SyntacticRole::Object))
            else {
                continue;
            };
            if let Some(filter) = entity_filter {
                let touches = [se, oe].iter().any(|e| filter.contains(&self.entities[e.index()].kb_id));
                if !touches {
                    continue;
                }
            }
            out.push(FactRecord {
                subject_mention: sm,
                subject_entity: se,
                predicate: self.clauses[clause.index()].props.predicate_text.clone(),
                object_mention: om,
                object_entity: oe,
                clause,
            });
        }
        out
    }
}

#[cfg(test)]
mod tests;

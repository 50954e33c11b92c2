//! Clause-level relation extraction toolkit.
//!
//! Annotated documents are loaded into a property graph of documents,
//! sentences, OpenIE clauses, entity mentions and knowledge-base entities.
//! Clauses are distilled into binary `⟨subject, verb[+particle], object⟩`
//! relations, a skip-gram model is trained on them, and canonical relations
//! are represented by signature vectors (the mean of their synonym or example
//! vectors). Clauses are classified by cosine-nearest signature, gold
//! sentence labels are transferred to clauses by argument correspondence, and
//! predictions are scored at sentence or clause granularity.
//!
//! Module map:
//!
//! - [`graph`]: the in-memory property graph and its flat-file snapshot.
//! - [`ingest`]: line-delimited annotated corpus, annotator merging, graph building.
//! - [`normalize`]: predicate extraction, triple distillation, bigram promotion.
//! - [`embed`]: skip-gram with negative sampling and the text vector format.
//! - [`signature`]: relation signatures and nearest-signature classification.
//! - [`supervise`]: distant-supervision label transfer to clauses.
//! - [`evaluate`]: sentence/clause-unit scoring, cross-validation, prediction files.
//! - [`pipeline`]: stage orchestration, configuration and run manifests.
//! - [`synth`]: planted-relation corpus generator used for fixtures and tests.

pub mod embed;
pub mod evaluate;
pub mod graph;
pub mod ingest;
pub mod kv;
pub mod normalize;
pub mod pipeline;
pub mod signature;
pub mod span;
pub mod supervise;
pub mod synth;
pub mod tsv;

pub use graph::{Graph, GraphStats, VertexId, VertexKind};
pub use span::{Span, SpanMatch};

//! Relation signatures and nearest-signature classification.
//!
//! A signature is the arithmetic mean of vectors standing for a relation:
//! its synonym phrases (normalized like clause predicates) or embeddings of
//! example sentences. Units are classified by cosine against every signature.

mod lexicon;

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::embed::{self, cosine_checked, EmbedError, EmbeddingModel};
use crate::normalize::{extract_predicate_with, pos_class, surface_tokens, BigramTable, NormalizedTriple, PosClass};
use crate::tsv::{self, TsvError};

pub use lexicon::Lexicon;

#[derive(Debug, Error)]
pub enum SignatureError {
    #[error("relation {relation}: no synonym could be vectorized")]
    AllOutOfVocab { relation: String },
    #[error("relation {relation}: no example vectors")]
    NoExamples { relation: String },
    #[error("{what}: dimension {found} differs from {expected}")]
    Dimension { what: String, expected: usize, found: usize },
    #[error("k = {k} must be between 1 and the number of signatures ({n})")]
    BadK { k: usize, n: usize },
    #[error(transparent)]
    Tsv(#[from] TsvError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSpec {
    pub relation_id: String,
    pub display_name: String,
    pub synonyms: Vec<String>,
}

/// Relation spec lines: `relation_id<TAB>display_name<TAB>synonym...`.
pub fn parse_relation_specs(text: &str, origin: &str) -> Result<Vec<RelationSpec>, TsvError> {
    let mut seen = BTreeSet::new();
    tsv::parse_rows(text, origin, 2, usize::MAX)?
        .into_iter()
        .map(|r| {
            let id = r.field(0).trim().to_string();
            if id.is_empty() || !seen.insert(id.clone()) {
                return Err(tsv::row_error(origin, &r, format!("empty or duplicate relation id `{id}`")));
            }
            Ok(RelationSpec {
                relation_id: id,
                display_name: r.field(1).to_string(),
                synonyms: r.fields[2..].iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            })
        })
        .collect()
}

pub fn read_relation_specs(path: &Path) -> Result<Vec<RelationSpec>, TsvError> {
    let text = std::fs::read_to_string(path).map_err(|source| TsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_relation_specs(&text, &path.display().to_string())
}

pub fn format_relation_specs(specs: &[RelationSpec]) -> String {
    specs
        .iter()
        .map(|s| {
            let fields = [s.relation_id.as_str(), s.display_name.as_str()]
                .into_iter()
                .chain(s.synonyms.iter().map(String::as_str));
            format!("{}\n", tsv::join(fields))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Synonyms,
    ExampleSentences,
    Imported,
}

/// How one contributing vector was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VectorEncoding {
    /// A single `verb_particle` vocabulary token.
    Bigram,
    /// `verb` plus `particle` vectors (or the verb alone).
    Composition,
    /// Mean of in-vocabulary content words of a non-verbal phrase.
    ContentMean,
    /// An externally supplied sentence vector.
    Example,
    Imported,
}

impl VectorEncoding {
    pub fn as_str(self) -> &'static str {
        match self {
            VectorEncoding::Bigram => "bigram",
            VectorEncoding::Composition => "composition",
            VectorEncoding::ContentMean => "content_mean",
            VectorEncoding::Example => "example",
            VectorEncoding::Imported => "imported",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contributor {
    pub source: String,
    pub encoding: VectorEncoding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationSignature {
    pub relation_id: String,
    pub vector: Vec<f64>,
    pub provenance: Provenance,
    pub contributors: Vec<Contributor>,
    /// The mean came out as the zero vector.
    pub degenerate: bool,
}

fn mean(vectors: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for v in vectors {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    let n = vectors.len().max(1) as f64;
    out.iter_mut().for_each(|x| *x /= n);
    out
}

fn add(acc: &mut [f64], v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += x;
    }
}

/// Vector for a normalized predicate: its bigram token when in vocabulary,
/// otherwise `verb + particle` (the particle only when in vocabulary).
pub fn predicate_vector(verb: &str, particle: Option<&str>, model: &EmbeddingModel) -> Option<(Vec<f64>, VectorEncoding)> {
    if let Some(p) = particle {
        if let Some(v) = model.lookup(&format!("{verb}_{p}")) {
            return Some((v.to_vec(), VectorEncoding::Bigram));
        }
    }
    let mut v = model.lookup(verb)?.to_vec();
    if let Some(pv) = particle.and_then(|p| model.lookup(p)) {
        add(&mut v, pv);
    }
    Some((v, VectorEncoding::Composition))
}

fn is_content(pos: &str) -> bool {
    pos_class(pos) != PosClass::Particle && !matches!(pos, "DT" | "CC" | "PRP" | "PRP$" | "POS" | "WDT" | "DET" | "CCONJ" | "PRON" | "PUNCT" | "." | ",")
}

/// Vectorize a synonym phrase by the same predicate normalization as
/// clauses. Phrases without a verbal reading fall back to the mean of their
/// in-vocabulary content words.
pub fn vectorize_phrase(phrase: &str, model: &EmbeddingModel, lexicon: &Lexicon) -> Option<(Vec<f64>, VectorEncoding)> {
    let tokens = lexicon.tag(phrase);
    let all: Vec<usize> = (0..tokens.len()).collect();
    if let Some(p) = extract_predicate_with(&tokens, &all, true) {
        return predicate_vector(&p.verb, p.particle.as_deref(), model);
    }
    let words: Vec<Vec<f64>> = tokens
        .iter()
        .filter(|t| is_content(&t.pos))
        .filter_map(|t| model.lookup(&t.lemma.to_lowercase()).or_else(|| model.lookup(&t.text.to_lowercase())))
        .map(<[f64]>::to_vec)
        .collect();
    if words.is_empty() {
        return None;
    }
    Some((mean(&words, model.dim()), VectorEncoding::ContentMean))
}

pub fn build_signature_from_synonyms(spec: &RelationSpec, model: &EmbeddingModel, lexicon: &Lexicon) -> Result<RelationSignature, SignatureError> {
    let mut vectors = Vec::new();
    let mut contributors = Vec::new();
    for phrase in &spec.synonyms {
        match vectorize_phrase(phrase, model, lexicon) {
            Some((v, encoding)) => {
                vectors.push(v);
                contributors.push(Contributor {
                    source: phrase.clone(),
                    encoding,
                });
            }
            None => log::debug!("relation {}: synonym `{phrase}` skipped (out of vocabulary)", spec.relation_id),
        }
    }
    if vectors.is_empty() {
        return Err(SignatureError::AllOutOfVocab {
            relation: spec.relation_id.clone(),
        });
    }
    let vector = mean(&vectors, model.dim());
    Ok(RelationSignature {
        degenerate: embed::norm(&vector) == 0.0,
        relation_id: spec.relation_id.clone(),
        vector,
        provenance: Provenance::Synonyms,
        contributors,
    })
}

/// Mean of example sentence vectors, keyed by sentence id.
pub fn build_signature_from_examples(relation_id: &str, examples: &[(String, Vec<f64>)]) -> Result<RelationSignature, SignatureError> {
    let dim = examples
        .first()
        .map(|e| e.1.len())
        .ok_or_else(|| SignatureError::NoExamples {
            relation: relation_id.to_string(),
        })?;
    for (id, v) in examples {
        if v.len() != dim {
            return Err(SignatureError::Dimension {
                what: format!("example `{id}`"),
                expected: dim,
                found: v.len(),
            });
        }
    }
    let vectors: Vec<Vec<f64>> = examples.iter().map(|e| e.1.clone()).collect();
    let vector = mean(&vectors, dim);
    Ok(RelationSignature {
        relation_id: relation_id.to_string(),
        degenerate: embed::norm(&vector) == 0.0,
        vector,
        provenance: Provenance::ExampleSentences,
        contributors: examples
            .iter()
            .map(|(id, _)| Contributor {
                source: id.clone(),
                encoding: VectorEncoding::Example,
            })
            .collect(),
    })
}

/// Signatures in the vector text format, one row per relation.
pub fn format_signatures(signatures: &[RelationSignature]) -> String {
    let dim = signatures.first().map_or(0, |s| s.vector.len());
    embed::format_rows(dim, signatures.iter().map(|s| (s.relation_id.as_str(), s.vector.as_slice())))
}

pub fn parse_signatures(text: &str, origin: &str) -> Result<Vec<RelationSignature>, SignatureError> {
    Ok(embed::parse_rows(text, origin)?
        .into_iter()
        .map(|(relation_id, vector)| RelationSignature {
            degenerate: embed::norm(&vector) == 0.0,
            relation_id,
            vector,
            provenance: Provenance::Imported,
            contributors: vec![Contributor {
                source: origin.to_string(),
                encoding: VectorEncoding::Imported,
            }],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub unit_id: String,
    /// `(relation_id, cosine)`, best first; ties by relation id.
    pub ranked: Vec<(String, f64)>,
    pub chosen: Vec<String>,
    /// The unit vector was zero, so nothing was ranked.
    pub zero_vector: bool,
}

/// Rank `signatures` by cosine to `vector` and choose the top `k`.
pub fn classify(unit_id: &str, vector: &[f64], signatures: &[RelationSignature], k: usize) -> Result<ClassificationResult, SignatureError> {
    if k == 0 || k > signatures.len() {
        return Err(SignatureError::BadK { k, n: signatures.len() });
    }
    for s in signatures {
        if s.vector.len() != vector.len() {
            return Err(SignatureError::Dimension {
                what: format!("signature {}", s.relation_id),
                expected: vector.len(),
                found: s.vector.len(),
            });
        }
    }
    if embed::norm(vector) == 0.0 {
        return Ok(ClassificationResult {
            unit_id: unit_id.to_string(),
            ranked: Vec::new(),
            chosen: Vec::new(),
            zero_vector: true,
        });
    }
    let mut ranked: Vec<(String, f64)> = signatures
        .iter()
        .map(|s| (s.relation_id.clone(), cosine_checked(vector, &s.vector).unwrap_or(0.0)))
        .collect();
    ranked.sort_by(rank_order);
    let chosen = ranked.iter().take(k).map(|r| r.0.clone()).collect();
    Ok(ClassificationResult {
        unit_id: unit_id.to_string(),
        ranked,
        chosen,
        zero_vector: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VectorMode {
    #[default]
    PredicateOnly,
    FullClauseMean,
}

impl fmt::Display for VectorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VectorMode::PredicateOnly => "predicate_only",
            VectorMode::FullClauseMean => "full_clause_mean",
        })
    }
}

impl FromStr for VectorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "predicate_only" => Ok(VectorMode::PredicateOnly),
            "full_clause_mean" => Ok(VectorMode::FullClauseMean),
            _ => Err(format!("unknown vector mode `{s}` (expected predicate_only or full_clause_mean)")),
        }
    }
}

/// A unit vector and whether it came out zero (nothing in vocabulary).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    pub vector: Vec<f64>,
    pub zero: bool,
}

/// Vectorize a distilled clause.
///
/// `PredicateOnly` uses the bigram-or-composition predicate vector;
/// `FullClauseMean` averages every in-vocabulary token of the encoded clause.
pub fn vectorize_triple(triple: &NormalizedTriple, model: &EmbeddingModel, table: &BigramTable, mode: VectorMode) -> UnitVector {
    let vector = match mode {
        VectorMode::PredicateOnly => predicate_vector(&triple.predicate.verb, triple.predicate.particle.as_deref(), model).map(|v| v.0),
        VectorMode::FullClauseMean => {
            let mut tokens = surface_tokens(&triple.subject_surface);
            tokens.extend(triple.predicate.tokens(table));
            tokens.extend(surface_tokens(&triple.object_surface));
            mean_of_tokens(&tokens, model)
        }
    };
    let vector = vector.unwrap_or_else(|| vec![0.0; model.dim()]);
    UnitVector {
        zero: embed::norm(&vector) == 0.0,
        vector,
    }
}

/// Mean vector of the in-vocabulary `tokens`, `None` when none are known.
pub fn mean_of_tokens<S: AsRef<str>>(tokens: &[S], model: &EmbeddingModel) -> Option<Vec<f64>> {
    let known: Vec<Vec<f64>> = tokens.iter().filter_map(|t| model.lookup(t.as_ref())).map(<[f64]>::to_vec).collect();
    (!known.is_empty()).then(|| mean(&known, model.dim()))
}

/// Signatures cached by `(relation_id, model fingerprint)`.
#[derive(Debug, Default)]
pub struct SignatureCache {
    entries: HashMap<(String, String), RelationSignature>,
}

impl SignatureCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(&mut self, spec: &RelationSpec, model: &EmbeddingModel, fingerprint: &str, lexicon: &Lexicon) -> Result<&RelationSignature, SignatureError> {
        let key = (spec.relation_id.clone(), fingerprint.to_string());
        if !self.entries.contains_key(&key) {
            let sig = build_signature_from_synonyms(spec, model, lexicon)?;
            self.entries.insert(key.clone(), sig);
        }
        Ok(&self.entries[&key])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Order `ranked` by score descending, ties by relation id.
pub fn rank_order(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

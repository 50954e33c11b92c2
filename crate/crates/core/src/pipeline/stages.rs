//! The pipeline stages as plain functions, shared by `run_pipeline` and the
//! per-stage commands.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use crate::embed::{self, EmbedError, EmbeddingModel, TrainConfig, TrainReport, Vocab};
use crate::evaluate::{PredictionRecord, UnitKind};
use crate::graph::Graph;
use crate::ingest::{self, BuildReport, IngestError, MergePolicy};
use crate::normalize::{self, BigramTable, DistillReport, NormalizedTriple};
use crate::signature::{self, Lexicon, RelationSignature, RelationSpec, SignatureError, VectorMode};
use crate::supervise::{GoldFact, LabeledClause};

pub struct IngestOutput {
    pub graph: Graph,
    pub report: BuildReport,
    pub warnings: usize,
}

pub fn ingest_corpus(corpus: &Path, policy: &MergePolicy, lenient: bool) -> Result<IngestOutput, IngestError> {
    let mut reader = ingest::parse_corpus(corpus, lenient)?;
    let records = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    let warnings = reader.warnings().len();
    let (graph, report) = ingest::build_graph(records, policy)?;
    Ok(IngestOutput { graph, report, warnings })
}

/// Distill every clause, promote bigrams at `min_count` and mark each
/// triple's encoding under the resulting table.
pub fn normalize_graph(g: &Graph, min_count: u64) -> (Vec<NormalizedTriple>, BigramTable, DistillReport) {
    let (mut triples, report) = normalize::distill_graph(g);
    let table = normalize::promote_bigrams(&triples, min_count);
    for t in &mut triples {
        t.predicate.apply_table(&table);
    }
    (triples, table, report)
}

/// Train skip-gram vectors on the encoded triples. Promoted bigrams stay
/// in the vocabulary whatever their count.
pub fn train_embeddings(triples: &[NormalizedTriple], table: &BigramTable, config: &TrainConfig) -> Result<(EmbeddingModel, TrainReport), EmbedError> {
    let sequences: Vec<Vec<String>> = triples.iter().map(|t| normalize::encode_tokens(t, table)).collect();
    let keep: BTreeSet<String> = table.iter().map(|(t, _)| t.to_string()).collect();
    let vocab = Vocab::build(&sequences, config.min_count, &keep)?;
    embed::train(&sequences, vocab, config)
}

pub fn synonym_signatures(specs: &[RelationSpec], model: &EmbeddingModel, lexicon: &Lexicon) -> Result<Vec<RelationSignature>, SignatureError> {
    specs.iter().map(|s| signature::build_signature_from_synonyms(s, model, lexicon)).collect()
}

/// Signatures from the labeled clauses of `examples` (relation to sentence
/// keys). Each example clause contributes its unit vector.
#[allow(clippy::too_many_arguments)]
pub fn example_signatures(
    specs: &[RelationSpec],
    examples: &BTreeMap<String, Vec<String>>,
    labeled: &[LabeledClause],
    triples: &[NormalizedTriple],
    model: &EmbeddingModel,
    table: &BigramTable,
    mode: VectorMode,
) -> Result<Vec<RelationSignature>, SignatureError> {
    let by_clause: HashMap<&str, &NormalizedTriple> = triples.iter().map(|t| (t.clause_key.as_str(), t)).collect();
    let mut out = Vec::new();
    for spec in specs {
        let sentences: BTreeSet<&str> = examples.get(&spec.relation_id).into_iter().flatten().map(String::as_str).collect();
        let mut vectors: Vec<(String, Vec<f64>)> = Vec::new();
        for l in labeled.iter().filter(|l| l.relation_id == spec.relation_id) {
            let sentence = l.clause_key.rsplit_once('#').map_or("", |(s, _)| s);
            if !sentences.contains(sentence) {
                continue;
            }
            if let Some(t) = by_clause.get(l.clause_key.as_str()) {
                let v = signature::vectorize_triple(t, model, table, mode);
                if !v.zero && !vectors.iter().any(|(k, _)| *k == l.clause_key) {
                    vectors.push((l.clause_key.clone(), v.vector));
                }
            }
        }
        out.push(signature::build_signature_from_examples(&spec.relation_id, &vectors)?);
    }
    Ok(out)
}

/// Gold facts whose sentence is in none of the example lists.
pub fn without_examples(gold: &[GoldFact], examples: &BTreeMap<String, Vec<String>>) -> Vec<GoldFact> {
    let held: BTreeSet<&str> = examples.values().flatten().map(String::as_str).collect();
    gold.iter().filter(|f| !held.contains(f.sentence_id.as_str())).cloned().collect()
}

/// Clause and sentence predictions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Predictions {
    pub clauses: Vec<PredictionRecord>,
    pub sentences: Vec<PredictionRecord>,
}

impl Predictions {
    pub fn for_unit(&self, kind: UnitKind) -> &[PredictionRecord] {
        match kind {
            UnitKind::Clause => &self.clauses,
            UnitKind::Sentence => &self.sentences,
        }
    }
}

/// Classify every clause of `g`. Distilled clauses with a non-zero vector
/// get their top `k` relations; all others abstain. A sentence is ranked
/// by the mean of its clause vectors over every relation.
pub fn classify_graph(
    g: &Graph,
    triples: &[NormalizedTriple],
    model: &EmbeddingModel,
    table: &BigramTable,
    signatures: &[RelationSignature],
    mode: VectorMode,
    k: usize,
) -> Result<Predictions, SignatureError> {
    let source = format!("w2v-{mode}");
    let by_clause: HashMap<_, _> = triples.iter().map(|t| (t.source_clause, t)).collect();
    let mut out = Predictions::default();
    for s in g.sentence_ids() {
        let sentence_key = g.sentence_key(s).unwrap_or_default();
        let mut vectors = Vec::new();
        for c in g.sentence_clauses(s) {
            let mut labels = Vec::new();
            if let Some(t) = by_clause.get(&c) {
                let v = signature::vectorize_triple(t, model, table, mode);
                let r = signature::classify(&t.clause_key, &v.vector, signatures, k.min(signatures.len()))?;
                labels = r.chosen;
                if !v.zero {
                    vectors.push(v.vector);
                }
            }
            out.clauses.push(PredictionRecord {
                unit_kind: UnitKind::Clause,
                unit_id: g.clause_key(c).unwrap_or_default(),
                parent_sentence_id: sentence_key.clone(),
                labels,
                source: source.clone(),
            });
        }
        let labels = if vectors.is_empty() {
            Vec::new()
        } else {
            let mut mean = vec![0.0; model.dim()];
            for v in &vectors {
                for (m, x) in mean.iter_mut().zip(v) {
                    *m += x / vectors.len() as f64;
                }
            }
            signature::classify(&sentence_key, &mean, signatures, signatures.len())?.chosen
        };
        out.sentences.push(PredictionRecord {
            unit_kind: UnitKind::Sentence,
            unit_id: sentence_key.clone(),
            parent_sentence_id: sentence_key,
            labels,
            source: source.clone(),
        });
    }
    Ok(out)
}

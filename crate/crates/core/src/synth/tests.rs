use super::*;
use crate::ingest::{build_graph, MergePolicy};
use crate::normalize::distill_graph;
use crate::span::SpanMatch;
use crate::supervise::{align_graph, validate_gold};

fn small() -> SynthConfig {
    SynthConfig {
        documents: 12,
        ..SynthConfig::default()
    }
}

#[test]
fn generation_is_seeded() {
    assert_eq!(generate(&small()), generate(&small()));
    assert_ne!(generate(&small()), generate(&SynthConfig { seed: 8, ..small() }));
}

#[test]
fn default_corpus_is_large_enough() {
    let c = generate(&SynthConfig::default());
    assert!(c.sentence_count() >= 500, "{}", c.sentence_count());
    assert_eq!(c.gold.len(), 5 * 100);
}

#[test]
fn records_validate_and_every_fact_aligns() {
    let c = generate(&small());
    for r in &c.records {
        r.validate().unwrap();
        assert_eq!(crate::ingest::AnnotatedDocumentRecord::from_line(&r.to_line()).unwrap(), *r);
    }
    let (g, report) = build_graph(c.records.clone(), &MergePolicy::default()).unwrap();
    assert_eq!(report.unattached_mentions, 0);
    assert_eq!(report.unresolved_coref_pairs, 0);
    validate_gold(&g, &c.gold).unwrap();
    let labeled = align_graph(&g, &c.gold, SpanMatch::Exact).unwrap();
    let facts: std::collections::BTreeSet<usize> = labeled.iter().map(|l| l.fact).collect();
    assert_eq!(facts.len(), c.gold.len());
    assert_eq!(labeled.len(), c.gold.len(), "one clause per fact");
}

#[test]
fn relation_clauses_distill_with_planted_predicates() {
    let c = generate(&small());
    let (g, _) = build_graph(c.records.clone(), &MergePolicy::default()).unwrap();
    let (triples, report) = distill_graph(&g);
    // Every relation and distractor clause yields a triple; intros do not.
    assert_eq!(report.rejected.values().sum::<usize>(), c.records.len());
    let verbs: std::collections::BTreeSet<String> = triples.iter().filter_map(|t| t.predicate.bigram_key()).collect();
    for v in ["born_in", "hail_from", "employed_by", "wed_to", "sign_with", "graduate_from"] {
        assert!(verbs.contains(v), "{v} missing from {verbs:?}");
    }
}

#[test]
fn folds_follow_documents() {
    let c = generate(&SynthConfig { folds: Some(4), ..small() });
    assert!(c.gold.iter().all(|f| f.fold == Some(f.sentence_id[3..7].parse::<u32>().unwrap() % 4)));
}

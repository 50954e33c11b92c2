use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::span::Span;

fn gold(entries: &[(&str, &[&str])]) -> GoldLabels {
    entries.iter().map(|(s, ls)| (s.to_string(), ls.iter().map(|l| l.to_string()).collect())).collect()
}

fn sent(id: &str, labels: &[&str]) -> PredictionRecord {
    PredictionRecord {
        unit_kind: UnitKind::Sentence,
        unit_id: id.into(),
        parent_sentence_id: id.into(),
        labels: labels.iter().map(|l| l.to_string()).collect(),
        source: "m".into(),
    }
}

fn clause(parent: &str, i: usize, labels: &[&str]) -> PredictionRecord {
    PredictionRecord {
        unit_kind: UnitKind::Clause,
        unit_id: format!("{parent}#{i}"),
        parent_sentence_id: parent.into(),
        labels: labels.iter().map(|l| l.to_string()).collect(),
        source: "m".into(),
    }
}

fn counts(r: &EvalReport) -> (u64, u64, u64) {
    (r.counts.tp, r.counts.fp, r.counts.fn_)
}

#[test]
fn sentence_single_top1() {
    let g = gold(&[("d#0", &["A"])]);
    assert_eq!(counts(&score_sentence_unit(&g, &[sent("d#0", &["A", "B"])], false).unwrap()), (1, 0, 0));
    assert_eq!(counts(&score_sentence_unit(&g, &[sent("d#0", &["B", "A"])], false).unwrap()), (0, 1, 1));
}

#[test]
fn sentence_multi_takes_top_gold_count() {
    let g = gold(&[("d#0", &["A", "B"])]);
    let r = score_sentence_unit(&g, &[sent("d#0", &["A", "C", "B"])], true).unwrap();
    assert_eq!(counts(&r), (1, 1, 1));
    assert_eq!((r.precision, r.recall, r.f1), (0.5, 0.5, 0.5));
}

#[test]
fn no_predictions_is_all_false_negatives() {
    let g = gold(&[("d#0", &["A", "B"]), ("d#1", &["C"])]);
    let r = score_sentence_unit(&g, &[], true).unwrap();
    assert_eq!(counts(&r), (0, 0, 3));
    assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    for v in [Variant::Any, Variant::All] {
        assert_eq!(counts(&score_clause_unit(&g, &[], v).unwrap()), (0, 0, 2));
    }
    assert_eq!(counts(&score_clause_unit(&g, &[clause("d#0", 0, &[])], Variant::Union).unwrap()), (0, 0, 3));
}

#[test]
fn any_and_all_on_mixed_clause_labels() {
    let g = gold(&[("d#0", &["L"])]);
    let preds = [clause("d#0", 0, &["L"]), clause("d#0", 1, &["M"])];
    assert_eq!(counts(&score_clause_unit(&g, &preds, Variant::Any).unwrap()), (1, 0, 0));
    assert_eq!(counts(&score_clause_unit(&g, &preds, Variant::All).unwrap()), (0, 1, 0));
}

#[test]
fn union_over_clause_labels() {
    let g = gold(&[("d#0", &["A", "B"])]);
    let preds = [clause("d#0", 0, &["A", "B"]), clause("d#0", 1, &["C"]), clause("d#0", 2, &["A"])];
    let r = score_clause_unit(&g, &preds, Variant::Union).unwrap();
    assert_eq!(counts(&r), (1, 1, 1));
    assert_eq!(r.per_relation["A"], TP);
    assert_eq!(r.per_relation["B"], FN);
    assert_eq!(r.per_relation["C"], FP);
    assert_eq!(r.f1, 0.5);
    assert!(r.notes.is_empty());
}

#[test]
fn union_on_single_label_gold_is_flagged() {
    let g = gold(&[("d#0", &["A"])]);
    let r = score_clause_unit(&g, &[clause("d#0", 0, &["A"])], Variant::Union).unwrap();
    assert_eq!(r.notes.len(), 1);
}

#[test]
fn any_equals_all_with_one_clause_per_sentence() {
    let g = gold(&[("a#0", &["A"]), ("b#0", &["B"]), ("c#0", &["C"])]);
    let preds = [clause("a#0", 0, &["A"]), clause("b#0", 0, &["A"]), clause("c#0", 0, &[])];
    let any = score_clause_unit(&g, &preds, Variant::Any).unwrap();
    let all = score_clause_unit(&g, &preds, Variant::All).unwrap();
    assert_eq!(any.counts, all.counts);
    assert_eq!((any.precision, any.recall), (all.precision, all.recall));
}

#[test]
fn unit_kind_and_duplicates_are_checked() {
    let g = gold(&[("d#0", &["A"])]);
    assert!(matches!(score_clause_unit(&g, &[sent("d#0", &["A"])], Variant::Any), Err(EvalError::UnitMismatch { .. })));
    let dup = [clause("d#0", 0, &["A"]), clause("d#0", 0, &["B"])];
    assert!(matches!(score_clause_unit(&g, &dup, Variant::Any), Err(EvalError::Duplicate(_))));
    assert!(score_clause_unit(&g, &[], Variant::SentenceSingle).is_err());
}

#[test]
fn non_gold_sentences_are_ignored() {
    let g = gold(&[("d#0", &["A"])]);
    let r = score_clause_unit(&g, &[clause("d#0", 0, &["A"]), clause("x#0", 0, &["B"])], Variant::Any).unwrap();
    assert_eq!((counts(&r), r.ignored), ((1, 0, 0), 1));
}

#[test]
fn macro_averages_relations() {
    let g = gold(&[("a#0", &["A"]), ("b#0", &["A"]), ("c#0", &["B"])]);
    let preds = [sent("a#0", &["A"]), sent("b#0", &["A"]), sent("c#0", &["A"])];
    let config = EvalConfig { variant: Variant::SentenceSingle, aggregation: Aggregation::Macro };
    let r = score(&g, &preds, config).unwrap();
    // A: tp 2, fp 1 -> P 2/3, R 1. B: fn 1 -> P 0, R 0.
    assert!((r.precision - 1.0 / 3.0).abs() < 1e-12);
    assert!((r.recall - 0.5).abs() < 1e-12);
}

#[test]
fn prediction_file_roundtrip_and_errors() {
    let preds = vec![clause("d#0", 0, &["A", "B"]), clause("d#0", 1, &[]), sent("d#1", &["C"])];
    let text = format_predictions(&preds);
    assert_eq!(parse_predictions(&text, "p", None).unwrap(), preds);
    assert!(parse_predictions("", "p", None).unwrap().is_empty());
    let known: BTreeSet<String> = ["d#0".to_string()].into();
    let err = parse_predictions(&text, "p", Some(&known)).unwrap_err();
    assert_eq!(err.to_string(), "p:4: unknown sentence id d#1");
    for bad in [
        "word\td#0#0\td#0\tA\tm\n",
        "clause\te#0#0\td#0\tA\tm\n",
        "sentence\td#0\td#1\tA\tm\n",
        "clause\td#0#0\td#0\tA,,B\tm\n",
        "clause\td#0#0\td#0\tA,A\tm\n",
        "clause\td#0#0\td#0\tA\tm\nclause\td#0#0\td#0\tB\tm\n",
        "clause\td#0#0\td#0\tA\n",
    ] {
        assert!(parse_predictions(bad, "p", None).is_err(), "{bad:?}");
    }
}

#[test]
fn externally_produced_clause_file_scores_unchanged() {
    // Layout of a file written by an outside classifier, comments included.
    let text = "# produced by a fine-tuned classifier\nclause\tkn1#0#0\tkn1#0\tSPOUSE\tdistilbert\nclause\tkn1#0#1\tkn1#0\tDATE_OF_BIRTH,SPOUSE\tdistilbert\n";
    let preds = parse_predictions(text, "ext", None).unwrap();
    let g = gold(&[("kn1#0", &["SPOUSE"])]);
    assert_eq!(counts(&score_clause_unit(&g, &preds, Variant::Any).unwrap()), (1, 0, 0));
}

fn facts(n: usize, folds: bool) -> Vec<GoldFact> {
    (0..n)
        .map(|i| GoldFact {
            sentence_id: format!("d{i:02}#0"),
            subject_span: Span::new(0, 1),
            object_span: Span::new(2, 3),
            relation_id: ["A", "B"][i % 2].into(),
            fold: folds.then_some((i % 4) as u32),
        })
        .collect()
}

fn oracle_runner(split: &Split) -> Result<Vec<PredictionRecord>, EvalError> {
    // Always `A`: right on even sentences, wrong on odd ones.
    Ok(split.test.iter().map(|s| sent(s, &["A"])).collect())
}

const SINGLE: EvalConfig = EvalConfig {
    variant: Variant::SentenceSingle,
    aggregation: Aggregation::Micro,
};

#[test]
fn splits_partition_sentences() {
    let f = facts(20, false);
    for protocol in [Protocol::KFold(4), Protocol::RandomSplits { runs: 3, train_fraction: 0.75 }] {
        for s in make_splits(&f, protocol, 5).unwrap() {
            assert!(s.train.is_disjoint(&s.test));
            assert_eq!(s.train.len() + s.test.len(), 20);
        }
    }
    let kf = make_splits(&f, Protocol::KFold(4), 5).unwrap();
    let tested: BTreeSet<_> = kf.iter().flat_map(|s| s.test.iter().cloned()).collect();
    assert_eq!(tested.len(), 20);
    assert_eq!(make_splits(&f, Protocol::RandomSplits { runs: 1, train_fraction: 0.75 }, 5).unwrap()[0].test.len(), 4, "8 of 10 per stratum train");
    assert_eq!(kf, make_splits(&f, Protocol::KFold(4), 5).unwrap());
    assert_ne!(kf, make_splits(&f, Protocol::KFold(4), 6).unwrap());
}

#[test]
fn fold_ids_take_precedence() {
    let f = facts(8, true);
    let s = make_splits(&f, Protocol::KFold(10), 0).unwrap();
    assert_eq!(s.len(), 4);
    assert!(s[1].test.iter().all(|k| k == "d01#0" || k == "d05#0"));
    let mut mixed = f.clone();
    mixed[0].fold = None;
    assert!(make_splits(&mixed, Protocol::KFold(4), 0).is_err());
}

#[test]
fn single_fold_equals_plain_score() {
    let f = facts(10, false);
    let cv = crossval(&f, Protocol::KFold(1), 3, SINGLE, oracle_runner).unwrap();
    let plain = score(&gold_labels(&f), &oracle_runner(&make_splits(&f, Protocol::KFold(1), 3).unwrap()[0]).unwrap(), SINGLE).unwrap();
    assert_eq!(cv.folds.len(), 1);
    assert_eq!((cv.mean_precision, cv.mean_recall, cv.mean_f1), (plain.precision, plain.recall, plain.f1));
}

#[test]
fn empty_folds_are_excluded_and_mean_is_arithmetic() {
    let f = facts(3, false);
    let cv = crossval(&f, Protocol::KFold(5), 1, SINGLE, oracle_runner).unwrap();
    assert_eq!(cv.excluded.len(), 2);
    assert_eq!(cv.folds.len(), 3);
    let mean_f1 = cv.folds.iter().map(|(_, r)| r.f1).sum::<f64>() / 3.0;
    assert!((cv.mean_f1 - mean_f1).abs() < 1e-15);
    let again = crossval(&f, Protocol::KFold(5), 1, SINGLE, oracle_runner).unwrap();
    assert_eq!(cv, again);
    assert!(format_crossval_tsv(&cv).contains("excluded"));
}

#[test]
fn report_formats() {
    let g = gold(&[("d#0", &["A", "B"])]);
    let r = score_clause_unit(&g, &[clause("d#0", 0, &["A"]), clause("d#0", 1, &["C"])], Variant::Union).unwrap();
    let tsv = format_report_tsv(&r);
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines[1], "total\tunion\tmicro\t*\t1\t1\t1\t0.500000\t0.500000\t0.500000");
    assert_eq!(lines.len(), 5);
    assert!(format_report_table(&r).contains("precision"));
}

fn arb_data() -> impl Strategy<Value = (GoldLabels, Vec<PredictionRecord>)> {
    let labels = || prop::sample::subsequence(vec!["A", "B", "C"], 0..=3);
    let sentence = (labels(), prop::collection::vec(labels().prop_shuffle(), 0..4));
    prop::collection::vec(sentence, 0..4).prop_map(|sents| {
        let mut g = GoldLabels::new();
        let mut preds = Vec::new();
        for (i, (gl, clauses)) in sents.into_iter().enumerate() {
            let key = format!("d#{i}");
            if !gl.is_empty() {
                g.insert(key.clone(), gl.iter().map(|l| l.to_string()).collect());
            }
            for (j, c) in clauses.iter().enumerate() {
                preds.push(clause(&key, j, c));
            }
        }
        (g, preds)
    })
}

proptest! {
    #[test]
    fn f1_identity_and_relation_sums((g, preds) in arb_data()) {
        for v in [Variant::Any, Variant::All, Variant::Union] {
            let r = score_clause_unit(&g, &preds, v).unwrap();
            prop_assert!((r.f1 - f1(r.precision, r.recall)).abs() < 1e-12);
            let mut sum = Counts::default();
            for c in r.per_relation.values() {
                sum.add(*c);
            }
            prop_assert_eq!(sum, r.counts);
        }
    }

    #[test]
    fn any_has_at_least_the_tps_of_all((g, preds) in arb_data()) {
        let any = score_clause_unit(&g, &preds, Variant::Any).unwrap();
        let all = score_clause_unit(&g, &preds, Variant::All).unwrap();
        prop_assert!(any.counts.tp >= all.counts.tp);
        prop_assert_eq!(any.counts.tp + any.counts.fp, all.counts.tp + all.counts.fp);
    }

    #[test]
    fn record_order_is_irrelevant((g, mut preds) in arb_data(), seed in any::<u64>()) {
        let before: Vec<_> = [Variant::Any, Variant::All, Variant::Union].iter().map(|&v| score_clause_unit(&g, &preds, v).unwrap()).collect();
        preds.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for (i, &v) in [Variant::Any, Variant::All, Variant::Union].iter().enumerate() {
            prop_assert_eq!(&before[i], &score_clause_unit(&g, &preds, v).unwrap());
        }
    }
}

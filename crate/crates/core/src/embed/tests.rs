use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;

fn seqs(lines: &[&str]) -> Vec<Vec<String>> {
    lines.iter().map(|l| l.split_whitespace().map(str::to_string).collect()).collect()
}

#[test]
fn vocab_threshold_and_order() {
    let v = Vocab::build(&seqs(&["a a b"]), 2, &BTreeSet::new()).unwrap();
    assert_eq!(v.tokens(), ["a"]);
    let v = Vocab::build(&seqs(&["c b b a a"]), 1, &BTreeSet::new()).unwrap();
    assert_eq!(v.tokens(), ["a", "b", "c"]);
    assert_eq!(v.counts(), [2, 2, 1]);
}

#[test]
fn promoted_bigrams_survive_min_count() {
    let keep: BTreeSet<String> = ["graduate_from".to_string()].into();
    let v = Vocab::build(&seqs(&["x graduate_from y", "x y", "x y", "x y", "x y"]), 5, &keep).unwrap();
    assert_eq!(v.tokens(), ["x", "y", "graduate_from"]);
}

#[test]
fn empty_vocab_is_an_error() {
    let none: Vec<Vec<String>> = Vec::new();
    assert!(matches!(Vocab::build(&none, 1, &BTreeSet::new()), Err(EmbedError::EmptyVocab { .. })));
}

#[test]
fn context_pairs_match_brute_force() {
    for len in 0..8 {
        for w in 1..4 {
            let mut brute = Vec::new();
            for i in 0..len as i64 {
                for j in 0..len as i64 {
                    if i != j && (i - j).abs() <= w as i64 {
                        brute.push((i as usize, j as usize));
                    }
                }
            }
            let mut got = context_pairs(len, w);
            got.sort();
            assert_eq!(got, brute, "len {len} window {w}");
        }
    }
}

#[test]
fn pair_gradient_matches_finite_differences() {
    let c = [0.3, -0.2, 0.5];
    let o = [0.1, 0.4, -0.3];
    let n1 = [-0.2, 0.2, 0.1];
    let g = pair_gradient(&c, &o, &[&n1]);
    let loss = |c: &[f64]| pair_gradient(c, &o, &[&n1]).loss;
    for i in 0..3 {
        let h = 1e-6;
        let (mut p, mut m) = (c, c);
        p[i] += h;
        m[i] -= h;
        let fd = (loss(&p) - loss(&m)) / (2.0 * h);
        assert!((fd - g.d_center[i]).abs() < 1e-8);
    }
}

fn cooccurrence_corpus() -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for i in 0..300 {
        let f = |k: usize| format!("f{}", (i * 7 + k) % 13);
        out.push(vec![f(0), "p".into(), "q".into(), f(1)]);
        out.push(vec![f(2), "r".into(), "s".into(), f(3), "t".into()]);
    }
    out
}

fn small_config() -> TrainConfig {
    TrainConfig {
        dim: 16,
        epochs: 5,
        seed: 7,
        ..TrainConfig::default()
    }
}

#[test]
fn training_is_deterministic_and_learns_cooccurrence() {
    let corpus = cooccurrence_corpus();
    let vocab = Vocab::build(&corpus, 1, &BTreeSet::new()).unwrap();
    let (m1, r1) = train(&corpus, vocab.clone(), &small_config()).unwrap();
    let (m2, r2) = train(&corpus, vocab, &small_config()).unwrap();
    assert_eq!(m1, m2);
    assert_eq!(r1, r2);
    assert_eq!(m1.fingerprint(), m2.fingerprint());
    let p = m1.lookup("p").unwrap();
    let q = m1.output_row(m1.vocab().get("q").unwrap()).unwrap();
    let r = m1.output_row(m1.vocab().get("r").unwrap()).unwrap();
    assert!(dot(p, q) > dot(p, r));
    assert!(r1.epoch_losses.windows(2).take(2).all(|w| w[1] <= w[0]), "{:?}", r1.epoch_losses);
}

#[test]
fn multithreaded_training_yields_finite_vectors() {
    let corpus = cooccurrence_corpus();
    let vocab = Vocab::build(&corpus, 1, &BTreeSet::new()).unwrap();
    let cfg = TrainConfig {
        threads: 3,
        subsample: Some(1e-3),
        ..small_config()
    };
    let (m, report) = train(&corpus, vocab, &cfg).unwrap();
    assert_eq!(report.epoch_losses.len(), 5);
    assert!((0..m.len()).all(|i| m.row(i).iter().all(|x| x.is_finite())));
}

#[test]
fn invalid_config_is_rejected() {
    let corpus = seqs(&["a b"]);
    let vocab = Vocab::build(&corpus, 1, &BTreeSet::new()).unwrap();
    for cfg in [
        TrainConfig { window: 0, ..TrainConfig::default() },
        TrainConfig { negatives: 0, ..TrainConfig::default() },
        TrainConfig { min_learning_rate: 0.0, ..TrainConfig::default() },
    ] {
        assert!(matches!(train(&corpus, vocab.clone(), &cfg), Err(EmbedError::Config(_))));
    }
}

#[test]
fn cosine_edge_cases() {
    let v = [0.3, -1.5, 2.0];
    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
    assert!((cosine(&v, &v) - 1.0).abs() < 1e-9);
    assert!((cosine(&v, &neg) + 1.0).abs() < 1e-9);
    assert_eq!(cosine_checked(&v, &[0.0; 3]), None);
    assert_eq!(cosine(&[0.0; 3], &v), 0.0);
}

#[test]
fn vectors_roundtrip_exactly() {
    let corpus = cooccurrence_corpus();
    let vocab = Vocab::build(&corpus, 1, &BTreeSet::new()).unwrap();
    let (m, _) = train(&corpus, vocab, &TrainConfig { epochs: 1, ..small_config() }).unwrap();
    let text = m.format_vectors();
    let back = EmbeddingModel::parse_vectors(&text, "v").unwrap();
    assert_eq!(back.vocab().tokens(), m.vocab().tokens());
    for i in 0..m.len() {
        assert_eq!(back.row(i), m.row(i));
    }
    assert_eq!(back.fingerprint(), m.fingerprint());
    assert_eq!(back.lookup("nope"), None);
}

#[test]
fn malformed_vector_files_are_rejected() {
    let err = |t: &str| EmbeddingModel::parse_vectors(t, "v").unwrap_err().to_string();
    let nine: String = (0..9).map(|i| format!("t{i} 1 2\n")).collect();
    assert!(err(&format!("10 2\n{nine}")).contains("declares 10 rows, found 9"));
    assert!(err("2 2\na 1 2\nb 1\n").contains("v:3: expected 2 values"));
    assert!(err("1 2\na NaN 1\n").contains("non-finite"));
    assert!(err("2 2\na 1 2\na 3 4\n").contains("duplicate token"));
    assert!(err("x\n").contains("bad header"));
}

#[test]
fn external_sentence_vectors_load() {
    let text = "3 4\nP19#s1 1 0 0 0\nP19#s2 0 1 0 0\nP26#s1 0 0 1 0\n";
    let m = EmbeddingModel::parse_vectors(text, "ext").unwrap();
    assert_eq!(m.lookup("P19#s2"), Some(&[0.0, 1.0, 0.0, 0.0][..]));
}

proptest! {
    #[test]
    fn cosine_is_symmetric_and_bounded(a in prop::collection::vec(-10.0f64..10.0, 4), b in prop::collection::vec(-10.0f64..10.0, 4)) {
        let x = cosine(&a, &b);
        prop_assert!((-1.0..=1.0).contains(&x));
        prop_assert_eq!(x, cosine(&b, &a));
    }
}

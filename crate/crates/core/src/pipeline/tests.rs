use std::path::Path;

use super::*;
use crate::evaluate::{Protocol, Variant};

#[test]
fn stage_seeds_differ_per_stage_and_master() {
    assert_eq!(stage_seed(1, "embed"), stage_seed(1, "embed"));
    assert_ne!(stage_seed(1, "embed"), stage_seed(1, "signature"));
    assert_ne!(stage_seed(1, "embed"), stage_seed(2, "embed"));
    // First 8 bytes of SHA-256 over 01 00 00 00 00 00 00 00 "embed".
    let mut input = 1u64.to_le_bytes().to_vec();
    input.extend_from_slice(b"embed");
    let digest = sha256_hex(&input);
    let expected = u64::from_le_bytes((0..8).map(|i| u8::from_str_radix(&digest[2 * i..2 * i + 2], 16).unwrap()).collect::<Vec<_>>().try_into().unwrap());
    assert_eq!(stage_seed(1, "embed"), expected);
}

#[test]
fn config_text_roundtrips() {
    let text = "profile = desk\ncorpus = c.jsonl\nrelations = r.tsv\ngold = g.tsv\noutput = out\nseed = 9\neval.splits = 10:0.75\nembed.dim = 20\ningest.priority = a, b\n";
    let c = PipelineConfig::from_entries(&crate::kv::parse(text).unwrap(), Path::new("/base")).unwrap();
    assert_eq!(c.profile, Profile::Desk);
    assert_eq!(c.corpus, Path::new("/base/c.jsonl"));
    assert_eq!(c.train.dim, 20);
    assert_eq!(c.train.epochs, 15);
    assert_eq!(c.protocol, Some(Protocol::RandomSplits { runs: 10, train_fraction: 0.75 }));
    assert_eq!(c.merge.annotator_priority, ["a", "b"]);
    let again = PipelineConfig::from_entries(&crate::kv::parse(&c.to_text()).unwrap(), Path::new("/elsewhere")).unwrap();
    assert_eq!(again, c);
}

#[test]
fn bad_keys_and_values_are_config_errors() {
    let mut c = PipelineConfig::new(Profile::Default);
    for (k, v) in [("nope", "1"), ("embed.dim", "x"), ("eval.variant", "most"), ("eval.splits", "10"), ("profile", "desk")] {
        assert!(c.set(k, v, Path::new("")).unwrap_err().is_config(), "{k}");
    }
    c.set("eval.variant", "sentence_multi", Path::new("")).unwrap();
    assert_eq!(c.variant, Variant::SentenceMulti);
}

#[test]
fn missing_gold_fails_validation_before_work() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["c.jsonl", "r.tsv"] {
        std::fs::write(dir.path().join(f), "").unwrap();
    }
    let mut c = PipelineConfig::new(Profile::Desk);
    c.corpus = dir.path().join("c.jsonl");
    c.relations = dir.path().join("r.tsv");
    c.gold = dir.path().join("missing.tsv");
    c.output = dir.path().join("out");
    let err = run_pipeline(&c).unwrap_err();
    assert!(err.is_config());
    assert!(err.to_string().contains("gold file"), "{err}");
    assert!(!c.output.exists());
}

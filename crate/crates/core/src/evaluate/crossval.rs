use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{gold_labels, score, Counts, EvalConfig, EvalError, EvalReport, GoldLabels, PredictionRecord};
use crate::supervise::GoldFact;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    /// `k` folds. Fold ids carried by the gold facts take precedence.
    KFold(usize),
    /// Repeated random splits, stratified by each sentence's first relation.
    RandomSplits { runs: usize, train_fraction: f64 },
}

/// Train and test sentence keys of one fold or run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub index: usize,
    pub train: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossvalReport {
    pub folds: Vec<(usize, EvalReport)>,
    /// Splits left out because their test side had no gold sentence.
    pub excluded: Vec<usize>,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    /// Counts summed over the scored folds.
    pub pooled: Counts,
}

fn fold_ids(facts: &[GoldFact]) -> Result<Option<BTreeMap<&str, u32>>, EvalError> {
    let with = facts.iter().filter(|f| f.fold.is_some()).count();
    if with == 0 {
        return Ok(None);
    }
    if with != facts.len() {
        return Err(EvalError::Config("only some gold facts carry a fold id".into()));
    }
    let mut out = BTreeMap::new();
    for f in facts {
        let fold = f.fold.expect("checked above");
        if *out.entry(f.sentence_id.as_str()).or_insert(fold) != fold {
            return Err(EvalError::Config(format!("sentence {} has facts in several folds", f.sentence_id)));
        }
    }
    Ok(Some(out))
}

/// Deterministic splits of the gold sentences for `protocol` and `seed`.
pub fn make_splits(facts: &[GoldFact], protocol: Protocol, seed: u64) -> Result<Vec<Split>, EvalError> {
    let gold = gold_labels(facts);
    let all: BTreeSet<String> = gold.keys().cloned().collect();
    let complement = |test: &BTreeSet<String>| all.difference(test).cloned().collect();
    match protocol {
        Protocol::KFold(0) => Err(EvalError::Config("fold count must be positive".into())),
        Protocol::KFold(k) => {
            let tests: Vec<BTreeSet<String>> = match fold_ids(facts)? {
                Some(ids) => {
                    let mut by_fold: BTreeMap<u32, BTreeSet<String>> = BTreeMap::new();
                    for (s, f) in ids {
                        by_fold.entry(f).or_default().insert(s.to_string());
                    }
                    if by_fold.len() != k {
                        log::warn!("gold carries {} fold ids; using them instead of {k} folds", by_fold.len());
                    }
                    by_fold.into_values().collect()
                }
                None => {
                    let mut order: Vec<&String> = all.iter().collect();
                    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                    let mut tests = vec![BTreeSet::new(); k];
                    for (i, s) in order.into_iter().enumerate() {
                        tests[i % k].insert(s.clone());
                    }
                    tests
                }
            };
            Ok(tests
                .into_iter()
                .enumerate()
                .map(|(index, test)| Split {
                    index,
                    train: complement(&test),
                    test,
                })
                .collect())
        }
        Protocol::RandomSplits { runs, train_fraction } => {
            if runs == 0 || !(train_fraction > 0.0 && train_fraction < 1.0) {
                return Err(EvalError::Config(format!("bad split {runs}:{train_fraction}; need runs > 0 and a fraction in (0,1)")));
            }
            let mut strata: BTreeMap<&str, Vec<&String>> = BTreeMap::new();
            for (s, labels) in &gold {
                strata.entry(labels.iter().next().map_or("", String::as_str)).or_default().push(s);
            }
            Ok((0..runs)
                .map(|index| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(index as u64);
                    let mut train = BTreeSet::new();
                    for members in strata.values() {
                        let mut m = members.clone();
                        m.shuffle(&mut rng);
                        let n = (m.len() as f64 * train_fraction).round() as usize;
                        train.extend(m.into_iter().take(n).cloned());
                    }
                    Split {
                        index,
                        test: complement(&train),
                        train,
                    }
                })
                .collect())
        }
    }
}

/// Score `runner`'s predictions on every split. Splits whose test side has
/// no gold sentence are skipped with a warning. Means are arithmetic means
/// of the per-split P, R and F1.
pub fn crossval<E, F>(facts: &[GoldFact], protocol: Protocol, seed: u64, config: EvalConfig, mut runner: F) -> Result<CrossvalReport, E>
where
    E: From<EvalError>,
    F: FnMut(&Split) -> Result<Vec<PredictionRecord>, E>,
{
    let gold = gold_labels(facts);
    let mut folds = Vec::new();
    let mut excluded = Vec::new();
    for split in make_splits(facts, protocol, seed)? {
        let test_gold: GoldLabels = gold.iter().filter(|(s, _)| split.test.contains(*s)).map(|(s, l)| (s.clone(), l.clone())).collect();
        if test_gold.is_empty() {
            log::warn!("split {} has no gold sentences in its test side; excluded", split.index);
            excluded.push(split.index);
            continue;
        }
        let preds = runner(&split)?;
        folds.push((split.index, score(&test_gold, &preds, config)?));
    }
    let n = folds.len().max(1) as f64;
    let mean = |f: fn(&EvalReport) -> f64| folds.iter().map(|(_, r)| f(r)).sum::<f64>() / n;
    let mut pooled = Counts::default();
    for (_, r) in &folds {
        pooled.add(r.counts);
    }
    Ok(CrossvalReport {
        mean_precision: mean(|r| r.precision),
        mean_recall: mean(|r| r.recall),
        mean_f1: mean(|r| r.f1),
        pooled,
        excluded,
        folds,
    })
}

//! Precision, recall and F1 for relation predictions against sentence-level
//! gold labels, with sentence units or clause units.
//!
//! Clause-unit variants take the top-ranked label of every non-abstaining
//! clause of a gold sentence:
//!
//! - `any`: one TP when some clause label is gold, else one FP.
//! - `all`: one TP when every clause label is gold, else one FP.
//! - `union`: TPs, FPs and FNs over the set of clause labels.
//!
//! A gold sentence with no labeled clause yields FNs in every variant.

mod crossval;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::supervise::GoldFact;
use crate::tsv::{self, TsvError};

pub use crossval::{crossval, make_splits, CrossvalReport, Protocol, Split};
pub use report::{format_crossval_tsv, format_report_table, format_report_tsv, format_crossval_table};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Tsv(#[from] TsvError),
    #[error("variant {variant} needs {expected} units, but {unit_id} is a {found} unit")]
    UnitMismatch {
        variant: Variant,
        expected: UnitKind,
        found: UnitKind,
        unit_id: String,
    },
    #[error("duplicate prediction for unit {0}")]
    Duplicate(String),
    #[error("{0}")]
    Config(String),
}

macro_rules! str_enum {
    ($name:ident { $($variant:ident => $s:literal $(| $alt:literal)*),+ $(,)? }) => {
        impl $name {
            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => $s),+
                }
            }
        }
        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.to_ascii_lowercase().as_str() {
                    $($s $(| $alt)* => Ok($name::$variant),)+
                    _ => Err(format!("unknown {} `{s}`", stringify!($name).to_lowercase())),
                }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnitKind {
    Sentence,
    Clause,
}
str_enum!(UnitKind { Sentence => "sentence", Clause => "clause" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Any,
    All,
    Union,
    SentenceSingle,
    SentenceMulti,
}
str_enum!(Variant {
    Any => "any",
    All => "all",
    Union => "union",
    SentenceSingle => "sent-single" | "sentence_single",
    SentenceMulti => "sent-multi" | "sentence_multi",
});

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Any, Variant::All, Variant::Union, Variant::SentenceSingle, Variant::SentenceMulti];

    pub fn unit_kind(self) -> UnitKind {
        match self {
            Variant::Any | Variant::All | Variant::Union => UnitKind::Clause,
            Variant::SentenceSingle | Variant::SentenceMulti => UnitKind::Sentence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Micro,
    Macro,
}
str_enum!(Aggregation { Micro => "micro", Macro => "macro" });

/// Ranked labels for one sentence or clause. Empty `labels` means the unit
/// abstains.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PredictionRecord {
    pub unit_kind: UnitKind,
    pub unit_id: String,
    pub parent_sentence_id: String,
    pub labels: Vec<String>,
    pub source: String,
}

impl PredictionRecord {
    pub fn top(&self) -> Option<&str> {
        self.labels.first().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }

    fn add(&mut self, o: Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub variant: Variant,
    pub aggregation: Aggregation,
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_relation: BTreeMap<String, Counts>,
    /// Gold sentences scored.
    pub sentences: usize,
    /// Prediction records whose sentence carries no gold label.
    pub ignored: usize,
    pub notes: Vec<String>,
}

/// Gold relation labels per sentence key.
pub type GoldLabels = BTreeMap<String, BTreeSet<String>>;

pub fn gold_labels(facts: &[GoldFact]) -> GoldLabels {
    let mut out = GoldLabels::new();
    for f in facts {
        out.entry(f.sentence_id.clone()).or_default().insert(f.relation_id.clone());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalConfig {
    pub variant: Variant,
    pub aggregation: Aggregation,
}

/// Check unit kinds and uniqueness, and group records by parent sentence.
fn group(variant: Variant, preds: &[PredictionRecord]) -> Result<BTreeMap<&str, Vec<&PredictionRecord>>, EvalError> {
    let mut seen = BTreeSet::new();
    let mut out: BTreeMap<&str, Vec<&PredictionRecord>> = BTreeMap::new();
    for p in preds {
        if p.unit_kind != variant.unit_kind() {
            return Err(EvalError::UnitMismatch {
                variant,
                expected: variant.unit_kind(),
                found: p.unit_kind,
                unit_id: p.unit_id.clone(),
            });
        }
        if !seen.insert(p.unit_id.as_str()) {
            return Err(EvalError::Duplicate(p.unit_id.clone()));
        }
        out.entry(p.parent_sentence_id.as_str()).or_default().push(p);
    }
    Ok(out)
}

fn dedup_ranked<'a>(labels: impl IntoIterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = BTreeSet::new();
    labels.into_iter().filter(|l| seen.insert(*l)).collect()
}

/// Outcome counts for one gold sentence, keyed by the relation they are
/// attributed to.
type Outcome<'a> = Vec<(&'a str, Counts)>;

const TP: Counts = Counts { tp: 1, fp: 0, fn_: 0 };
const FP: Counts = Counts { tp: 0, fp: 1, fn_: 0 };
const FN: Counts = Counts { tp: 0, fp: 0, fn_: 1 };

fn set_outcome<'a>(predicted: &[&'a str], gold: &'a BTreeSet<String>) -> Outcome<'a> {
    let mut out: Outcome = predicted.iter().map(|&l| (l, if gold.contains(l) { TP } else { FP })).collect();
    out.extend(gold.iter().filter(|g| !predicted.contains(&g.as_str())).map(|g| (g.as_str(), FN)));
    out
}

fn sentence_outcome<'a>(variant: Variant, gold: &'a BTreeSet<String>, records: &[&'a PredictionRecord]) -> Outcome<'a> {
    let first_gold = gold.iter().next().map_or("", String::as_str);
    match variant {
        Variant::SentenceSingle => match records.first().and_then(|r| r.top()) {
            None => vec![(first_gold, FN)],
            Some(l) if gold.contains(l) => vec![(l, TP)],
            Some(l) => vec![(l, FP), (first_gold, FN)],
        },
        Variant::SentenceMulti => {
            let ranked = records.first().map(|r| dedup_ranked(r.labels.iter().map(String::as_str))).unwrap_or_default();
            let top: Vec<&str> = ranked.into_iter().take(gold.len()).collect();
            set_outcome(&top, gold)
        }
        Variant::Any | Variant::All | Variant::Union => {
            let mut labels: Vec<&str> = records.iter().filter_map(|r| r.top()).collect();
            labels.sort_unstable();
            if labels.is_empty() {
                return match variant {
                    Variant::Union => gold.iter().map(|g| (g.as_str(), FN)).collect(),
                    _ => vec![(first_gold, FN)],
                };
            }
            match variant {
                Variant::Any => match labels.iter().copied().find(|l| gold.contains(*l)) {
                    Some(l) => vec![(l, TP)],
                    None => vec![(labels[0], FP)],
                },
                Variant::All => match labels.iter().copied().find(|l| !gold.contains(*l)) {
                    None => vec![(labels[0], TP)],
                    Some(l) => vec![(l, FP)],
                },
                _ => {
                    labels.dedup();
                    set_outcome(&labels, gold)
                }
            }
        }
    }
}

/// Score `preds` against `gold` under `config`. Records for sentences
/// without gold labels are ignored and counted.
pub fn score(gold: &GoldLabels, preds: &[PredictionRecord], config: EvalConfig) -> Result<EvalReport, EvalError> {
    let grouped = group(config.variant, preds)?;
    let mut total = Counts::default();
    let mut per_relation: BTreeMap<String, Counts> = BTreeMap::new();
    for (sentence, labels) in gold {
        let records = grouped.get(sentence.as_str()).map(Vec::as_slice).unwrap_or_default();
        for (rel, c) in sentence_outcome(config.variant, labels, records) {
            total.add(c);
            per_relation.entry(rel.to_string()).or_default().add(c);
        }
    }
    let ignored = grouped.iter().filter(|(s, _)| !gold.contains_key(**s)).map(|(_, r)| r.len()).sum();
    let mut notes = Vec::new();
    if config.variant == Variant::Union && !gold.is_empty() && gold.values().all(|g| g.len() == 1) {
        notes.push("union on single-label gold: every sentence has one label".to_string());
    }
    if ignored > 0 {
        notes.push(format!("{ignored} prediction records for sentences without gold labels ignored"));
    }
    let (precision, recall) = match config.aggregation {
        Aggregation::Micro => (total.precision(), total.recall()),
        Aggregation::Macro => {
            let n = per_relation.len().max(1) as f64;
            (
                per_relation.values().map(Counts::precision).sum::<f64>() / n,
                per_relation.values().map(Counts::recall).sum::<f64>() / n,
            )
        }
    };
    Ok(EvalReport {
        variant: config.variant,
        aggregation: config.aggregation,
        counts: total,
        precision,
        recall,
        f1: f1(precision, recall),
        per_relation,
        sentences: gold.len(),
        ignored,
        notes,
    })
}

/// Sentence-unit scoring: top-1 when `multi_label` is false, else the top
/// `|gold|` distinct labels.
pub fn score_sentence_unit(gold: &GoldLabels, preds: &[PredictionRecord], multi_label: bool) -> Result<EvalReport, EvalError> {
    let variant = if multi_label { Variant::SentenceMulti } else { Variant::SentenceSingle };
    score(gold, preds, EvalConfig { variant, aggregation: Aggregation::Micro })
}

pub fn score_clause_unit(gold: &GoldLabels, preds: &[PredictionRecord], variant: Variant) -> Result<EvalReport, EvalError> {
    if variant.unit_kind() != UnitKind::Clause {
        return Err(EvalError::Config(format!("{variant} is not a clause-unit variant")));
    }
    score(gold, preds, EvalConfig { variant, aggregation: Aggregation::Micro })
}

const ABSTAIN: &str = "-";
const PREDICTION_HEADER: &str = "#unit_kind\tunit_id\tparent_sentence_id\tlabels\tsource";

/// Prediction lines: `unit_kind, unit_id, parent_sentence_id, labels,
/// source`. Labels are comma-separated in rank order; `-` or an empty field
/// abstains.
pub fn format_predictions(preds: &[PredictionRecord]) -> String {
    let mut out = format!("{PREDICTION_HEADER}\n");
    for p in preds {
        let labels = if p.labels.is_empty() { ABSTAIN.to_string() } else { p.labels.join(",") };
        out.push_str(&tsv::join([p.unit_kind.as_str(), &p.unit_id, &p.parent_sentence_id, &labels, &p.source]));
        out.push('\n');
    }
    out
}

/// Parse and validate prediction lines. With `known`, every parent sentence
/// must be in it.
pub fn parse_predictions(text: &str, origin: &str, known: Option<&BTreeSet<String>>) -> Result<Vec<PredictionRecord>, TsvError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for r in tsv::parse_rows(text, origin, 5, 5)? {
        let bad = |m: String| tsv::row_error(origin, &r, m);
        let unit_kind: UnitKind = r.field(0).parse().map_err(bad)?;
        let (unit_id, parent) = (r.field(1), r.field(2));
        if unit_id.is_empty() || parent.is_empty() {
            return Err(bad("empty unit or sentence id".into()));
        }
        match unit_kind {
            UnitKind::Sentence if unit_id != parent => {
                return Err(bad(format!("sentence unit {unit_id} names a different sentence {parent}")));
            }
            UnitKind::Clause if !unit_id.strip_prefix(parent).is_some_and(|rest| rest.starts_with('#')) => {
                return Err(bad(format!("clause {unit_id} does not belong to sentence {parent}")));
            }
            _ => {}
        }
        if known.is_some_and(|k| !k.contains(parent)) {
            return Err(bad(format!("unknown sentence id {parent}")));
        }
        if !seen.insert(unit_id.to_string()) {
            return Err(bad(format!("duplicate unit id {unit_id}")));
        }
        let labels: Vec<String> = match r.field(3) {
            "" | ABSTAIN => Vec::new(),
            l => l.split(',').map(str::to_string).collect(),
        };
        if labels.iter().any(String::is_empty) {
            return Err(bad("empty label".into()));
        }
        if dedup_ranked(labels.iter().map(String::as_str)).len() != labels.len() {
            return Err(bad("repeated label".into()));
        }
        out.push(PredictionRecord {
            unit_kind,
            unit_id: unit_id.to_string(),
            parent_sentence_id: parent.to_string(),
            labels,
            source: r.field(4).to_string(),
        });
    }
    Ok(out)
}

pub fn load_predictions(path: &Path, known: Option<&BTreeSet<String>>) -> Result<Vec<PredictionRecord>, TsvError> {
    let text = std::fs::read_to_string(path).map_err(|source| TsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_predictions(&text, &path.display().to_string(), known)
}

#[cfg(test)]
mod tests;

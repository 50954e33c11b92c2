//! Merging annotations from several annotators into one layer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AnnotatedDocumentRecord, ClauseRecord, MentionRecord};
use crate::graph::NerType;
use crate::span::{Span, SpanMatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnnotationLayer {
    Mentions,
    Clauses,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeMode {
    #[default]
    Union,
    Intersection,
}

impl fmt::Display for MergeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MergeMode::Union => "union",
            MergeMode::Intersection => "intersection",
        })
    }
}

impl FromStr for MergeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "union" => Ok(MergeMode::Union),
            "intersection" => Ok(MergeMode::Intersection),
            _ => Err(format!("unknown merge mode `{s}` (expected union or intersection)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MergePolicy {
    pub mode: MergeMode,
    pub span_match: SpanMatch,
    /// Annotators whose entity links win conflicts, highest priority first.
    /// Unlisted annotators rank after listed ones, by name.
    pub annotator_priority: Vec<String>,
}

impl MergePolicy {
    fn rank(&self, annotator: &str) -> (usize, String) {
        // A merged name ranks by its best member.
        annotator
            .split('+')
            .map(|a| match self.annotator_priority.iter().position(|p| p == a) {
                Some(i) => (i, String::new()),
                None => (self.annotator_priority.len(), a.to_string()),
            })
            .min()
            .unwrap_or((usize::MAX, String::new()))
    }
}

fn annotator_set(name: &str) -> BTreeSet<&str> {
    name.split('+').collect()
}

fn joined(members: &BTreeSet<&str>) -> String {
    members.iter().copied().collect::<Vec<_>>().join("+")
}

/// Union-find clustering of `n` items under `same`.
fn cluster(n: usize, same: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if same(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Longest first, then lexicographically earlier annotator, then earlier start.
fn representative<T>(items: &[&T], len: impl Fn(&T) -> usize, annotator: impl Fn(&T) -> &str, start: impl Fn(&T) -> usize) -> usize {
    (0..items.len())
        .min_by(|&a, &b| {
            let (x, y) = (items[a], items[b]);
            len(y)
                .cmp(&len(x))
                .then_with(|| annotator(x).cmp(annotator(y)))
                .then_with(|| start(x).cmp(&start(y)))
        })
        .expect("clusters are non-empty")
}

fn keep(mode: MergeMode, members: &BTreeSet<&str>, all: &BTreeSet<&str>) -> bool {
    match mode {
        MergeMode::Union => true,
        MergeMode::Intersection => all.is_subset(members),
    }
}

fn merge_mentions(mentions: &[MentionRecord], policy: &MergePolicy, all: &BTreeSet<&str>) -> Vec<MentionRecord> {
    let same = |i: usize, j: usize| {
        let (a, b) = (&mentions[i], &mentions[j]);
        a.ner == b.ner && policy.span_match.matches(&a.span, &b.span)
    };
    let mut out = Vec::new();
    for group in cluster(mentions.len(), same) {
        let items: Vec<&MentionRecord> = group.iter().map(|&i| &mentions[i]).collect();
        let members: BTreeSet<&str> = items.iter().flat_map(|m| annotator_set(&m.annotator)).collect();
        if !keep(policy.mode, &members, all) {
            log::debug!("intersection drops mention cluster at {} ({})", items[0].span, joined(&members));
            continue;
        }
        let rep = items[representative(&items, |m| m.span.len(), |m| &m.annotator, |m| m.span.start)];
        let kb_id = items
            .iter()
            .filter(|m| m.kb_id.is_some())
            .min_by_key(|m| policy.rank(&m.annotator))
            .and_then(|m| m.kb_id.clone());
        if items.len() > 1 {
            log::debug!(
                "merged {} mentions into {} from `{}` (longest span), kb_id {:?}",
                items.len(),
                rep.span,
                rep.annotator,
                kb_id
            );
        }
        out.push(MentionRecord {
            span: rep.span,
            ner: rep.ner,
            kb_id,
            annotator: joined(&members),
        });
    }
    out.sort_by_key(|m| (m.span, m.ner));
    out
}

fn clause_len(c: &ClauseRecord) -> usize {
    c.subject.len() + c.predicate.len() + c.object.map_or(0, |o| o.len())
}

fn merge_clauses(clauses: &[ClauseRecord], policy: &MergePolicy, all: &BTreeSet<&str>) -> Vec<ClauseRecord> {
    let m = policy.span_match;
    let same = |i: usize, j: usize| {
        let (a, b) = (&clauses[i], &clauses[j]);
        let object = match (&a.object, &b.object) {
            (None, None) => true,
            (Some(x), Some(y)) => m.matches(x, y),
            _ => false,
        };
        object && m.matches(&a.subject, &b.subject) && m.matches(&a.predicate, &b.predicate)
    };
    let mut out = Vec::new();
    for group in cluster(clauses.len(), same) {
        let items: Vec<&ClauseRecord> = group.iter().map(|&i| &clauses[i]).collect();
        let members: BTreeSet<&str> = items.iter().flat_map(|c| annotator_set(&c.annotator)).collect();
        if !keep(policy.mode, &members, all) {
            continue;
        }
        let rep = items[representative(&items, clause_len, |c| &c.annotator, |c| c.subject.start)];
        out.push(ClauseRecord {
            annotator: joined(&members),
            ..rep.clone()
        });
    }
    out.sort_by_key(|c| (c.subject, c.predicate, c.object));
    out
}

/// Merge one annotation layer of `record` across annotators.
///
/// Annotations cluster per sentence: by identical span (and NER type for
/// mentions) under exact matching, or transitively by overlap under overlap
/// matching. Each cluster keeps its longest member; the merged annotator
/// name joins the sorted member names with `+`. Intersection keeps clusters
/// asserted by every annotator that contributed to the layer in this
/// document. Merging is idempotent.
pub fn merge_annotations(record: &AnnotatedDocumentRecord, layer: AnnotationLayer, policy: &MergePolicy) -> AnnotatedDocumentRecord {
    let mut out = record.clone();
    match layer {
        AnnotationLayer::Mentions => {
            let all: BTreeSet<&str> = record
                .sentences
                .iter()
                .flat_map(|s| s.mentions.iter().flat_map(|m| annotator_set(&m.annotator)))
                .collect();
            for (dst, src) in out.sentences.iter_mut().zip(&record.sentences) {
                dst.mentions = merge_mentions(&src.mentions, policy, &all);
            }
        }
        AnnotationLayer::Clauses => {
            let all: BTreeSet<&str> = record
                .sentences
                .iter()
                .flat_map(|s| s.clauses.iter().flat_map(|c| annotator_set(&c.annotator)))
                .collect();
            for (dst, src) in out.sentences.iter_mut().zip(&record.sentences) {
                dst.clauses = merge_clauses(&src.clauses, policy, &all);
            }
        }
    }
    out
}

/// Spans and NER types of a merged mention layer, for set comparisons.
pub fn mention_keys(record: &AnnotatedDocumentRecord) -> BTreeSet<(usize, Span, NerType)> {
    record
        .sentences
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.mentions.iter().map(move |m| (i, m.span, m.ner)))
        .collect()
}

use std::collections::{BTreeMap, HashMap};

use crate::graph::{Graph, Token};
use crate::span::Span;

const PARTICLES: &[&str] = &[
    "about", "across", "after", "against", "as", "at", "by", "for", "from", "in", "into", "of", "off", "on", "onto", "out", "over",
    "through", "to", "under", "up", "with", "within",
];

const AUX_BE: &[&str] = &["be", "is", "are", "was", "were", "been", "being"];

/// Most frequent POS tag and lemma per lowercased word, for tagging free
/// phrases consistently with the annotated corpus.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, (String, String)>,
}

impl Lexicon {
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a Token>) -> Self {
        let mut counts: HashMap<String, BTreeMap<(String, String), u64>> = HashMap::new();
        for t in tokens {
            *counts
                .entry(t.text.to_lowercase())
                .or_default()
                .entry((t.pos.clone(), t.lemma.clone()))
                .or_default() += 1;
        }
        let entries = counts
            .into_iter()
            .map(|(w, tags)| {
                // Highest count; BTreeMap order breaks ties.
                let best = tags.iter().max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0))).map(|(k, _)| k.clone());
                (w, best.expect("non-empty tag counts"))
            })
            .collect();
        Lexicon { entries }
    }

    pub fn from_graph(g: &Graph) -> Self {
        let sentences: Vec<_> = g.sentence_ids().filter_map(|s| g.sentence(s)).collect();
        Self::from_tokens(sentences.iter().flat_map(|s| s.tokens.iter()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Tag each whitespace-separated word. Unknown words are tagged `IN` when
    /// they are common prepositions, `VBD` for forms of "be", else `NN`.
    pub fn tag(&self, phrase: &str) -> Vec<Token> {
        let mut off = 0;
        phrase
            .split_whitespace()
            .map(|w| {
                let lower = w.to_lowercase();
                let (pos, lemma) = match self.entries.get(&lower) {
                    Some((p, l)) => (p.clone(), l.clone()),
                    None if PARTICLES.contains(&lower.as_str()) => ("IN".to_string(), lower.clone()),
                    None if AUX_BE.contains(&lower.as_str()) => ("VBD".to_string(), "be".to_string()),
                    None => ("NN".to_string(), lower.clone()),
                };
                let span = Span::new(off, off + w.len());
                off += w.len() + 1;
                Token {
                    span,
                    text: w.to_string(),
                    pos,
                    lemma,
                }
            })
            .collect()
    }
}

//! Verb and particle extraction over POS-tagged predicate tokens.

use std::sync::OnceLock;

use regex::Regex;

use super::{PredicateForm, Voice};
use crate::graph::Token;

/// Coarse token classes the predicate pattern is written over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosClass {
    Modal,
    Adverb,
    Verb,
    Particle,
    Other,
}

impl PosClass {
    fn code(self) -> char {
        match self {
            PosClass::Modal => 'M',
            PosClass::Adverb => 'R',
            PosClass::Verb => 'V',
            PosClass::Particle => 'P',
            PosClass::Other => 'X',
        }
    }
}

/// Penn Treebank and Universal Dependencies tags.
pub fn pos_class(pos: &str) -> PosClass {
    match pos {
        "MD" => PosClass::Modal,
        "RB" | "RBR" | "RBS" | "ADV" => PosClass::Adverb,
        "VERB" | "AUX" => PosClass::Verb,
        "RP" | "IN" | "TO" | "ADP" | "PART" => PosClass::Particle,
        p if p.starts_with("VB") => PosClass::Verb,
        _ => PosClass::Other,
    }
}

fn pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[MRV]*V(P*)$").expect("valid pattern"))
}

/// Normalize a clause predicate to `verb` or `verb + particle`.
///
/// The predicate tokens must read as optional modals, adverbs and
/// auxiliaries, a verbal head, and optional trailing particles. The particle
/// is the token right after the head (inside the predicate or, failing that,
/// the next sentence token) when it is a particle or preposition. Passive
/// voice (a `be` auxiliary and a `VBN` head) keeps the participle; otherwise
/// the head is replaced by its lemma.
pub fn extract_predicate(tokens: &[Token], predicate_token_indices: &[usize]) -> Option<PredicateForm> {
    extract_predicate_with(tokens, predicate_token_indices, false)
}

/// As [`extract_predicate`]; with `reduced_passive`, a lone `VBN` head with no
/// auxiliary also counts as passive (for phrases like "born in").
pub fn extract_predicate_with(tokens: &[Token], predicate_token_indices: &[usize], reduced_passive: bool) -> Option<PredicateForm> {
    let pred: Vec<(usize, &Token)> = predicate_token_indices
        .iter()
        .filter_map(|&i| tokens.get(i).map(|t| (i, t)))
        .collect();
    if pred.is_empty() || pred.len() != predicate_token_indices.len() {
        return None;
    }
    let classes: String = pred.iter().map(|(_, t)| pos_class(&t.pos).code()).collect();
    if !pattern().is_match(&classes) {
        return None;
    }
    let head_pos = classes.rfind('V')?;
    let (head_idx, head) = pred[head_pos];
    let aux_be = pred[..head_pos]
        .iter()
        .any(|(_, t)| pos_class(&t.pos) == PosClass::Verb && t.lemma.eq_ignore_ascii_case("be"));
    let lone_verb = !pred[..head_pos].iter().any(|(_, t)| pos_class(&t.pos) == PosClass::Verb);
    let passive = head.pos == "VBN" && (aux_be || (reduced_passive && lone_verb));
    let particle = tokens
        .get(head_idx + 1)
        .filter(|t| pos_class(&t.pos) == PosClass::Particle)
        .map(|t| t.lemma.to_lowercase());
    let verb = if passive {
        head.text.to_lowercase()
    } else {
        head.lemma.to_lowercase()
    };
    if verb.is_empty() {
        return None;
    }
    Some(PredicateForm::new(verb, particle, if passive { Voice::Passive } else { Voice::Active }))
}


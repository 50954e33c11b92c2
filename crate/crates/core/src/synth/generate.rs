//! Planted-relation corpus: biographies whose relation sentences use verb
//! phrases from disjoint per-relation sets.

use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DocBuilder;
use crate::graph::NerType;
use crate::ingest::AnnotatedDocumentRecord;
use crate::signature::{format_relation_specs, RelationSpec};
use crate::supervise::{format_gold, GoldFact};
use crate::tsv::{self, TsvError};

/// One way of voicing a relation: alternative tagged predicate forms, and
/// the tagged preposition opening the object span (empty for none).
struct Realization {
    predicate: &'static [&'static str],
    lead: &'static str,
}

struct Relation {
    id: &'static str,
    display: &'static str,
    synonyms: &'static [&'static str],
    realizations: &'static [Realization],
    objects: &'static [&'static str],
    object_ner: NerType,
    kb_prefix: &'static str,
}

const RELATIONS: &[Relation] = &[
    Relation {
        id: "P19",
        display: "place of birth",
        synonyms: &["born in", "hails from", "comes from"],
        realizations: &[
            Realization { predicate: &["was/VBD/be born/VBN/bear", "is/VBZ/be born/VBN/bear"], lead: "in/IN" },
            Realization { predicate: &["hails/VBZ/hail", "hailed/VBD/hail"], lead: "from/IN" },
            Realization { predicate: &["comes/VBZ/come", "came/VBD/come"], lead: "from/IN" },
        ],
        objects: &["Tartu", "Bergen", "Lyon", "Porto", "Graz", "Krakow", "Leeds", "Utrecht", "Malmo", "Turin", "Aarhus", "Ghent"],
        object_ner: NerType::Loc,
        kb_prefix: "Q3",
    },
    Relation {
        id: "P69",
        display: "educated at",
        synonyms: &["graduated from", "studied at", "enrolled at"],
        realizations: &[
            Realization { predicate: &["graduated/VBD/graduate", "graduates/VBZ/graduate"], lead: "from/IN" },
            Realization { predicate: &["studied/VBD/study", "studies/VBZ/study"], lead: "at/IN" },
            Realization { predicate: &["enrolled/VBD/enroll", "enrolls/VBZ/enroll"], lead: "at/IN" },
        ],
        objects: &[
            "Halden College",
            "Ridgeway University",
            "Northfield Institute",
            "Elmstead Academy",
            "Corven University",
            "Lindqvist College",
            "Ashgrove Polytechnic",
            "Marlow Conservatory",
        ],
        object_ner: NerType::Org,
        kb_prefix: "Q4",
    },
    Relation {
        id: "P108",
        display: "employer",
        synonyms: &["works for", "employed by", "works at"],
        realizations: &[
            Realization { predicate: &["works/VBZ/work", "worked/VBD/work"], lead: "for/IN" },
            Realization { predicate: &["was/VBD/be employed/VBN/employ", "is/VBZ/be employed/VBN/employ"], lead: "by/IN" },
            Realization { predicate: &["works/VBZ/work", "worked/VBD/work"], lead: "at/IN" },
        ],
        objects: &["Vantor Systems", "Quillan Foods", "Orbis Freight", "Maddox Labs", "Telmar Energy", "Brightwater Media", "Castell Bank", "Norrland Steel"],
        object_ner: NerType::Org,
        kb_prefix: "Q5",
    },
    Relation {
        id: "P26",
        display: "spouse",
        synonyms: &["married", "wed to", "engaged to"],
        realizations: &[
            Realization { predicate: &["married/VBD/marry", "marries/VBZ/marry"], lead: "" },
            Realization { predicate: &["was/VBD/be wed/VBN/wed", "is/VBZ/be wed/VBN/wed"], lead: "to/IN" },
            Realization { predicate: &["was/VBD/be engaged/VBN/engage", "is/VBZ/be engaged/VBN/engage"], lead: "to/IN" },
        ],
        objects: &["Nora Lind", "Elias Varga", "Maren Holt", "Tomas Rey", "Ines Castro", "Jonas Ek", "Lea Moreau", "Oskar Brandt", "Vera Novak", "Felix Aalto"],
        object_ner: NerType::Per,
        kb_prefix: "Q6",
    },
    Relation {
        id: "P463",
        display: "member of",
        synonyms: &["belongs to", "admitted to", "signed with"],
        realizations: &[
            Realization { predicate: &["belongs/VBZ/belong", "belonged/VBD/belong"], lead: "to/IN" },
            Realization { predicate: &["was/VBD/be admitted/VBN/admit", "is/VBZ/be admitted/VBN/admit"], lead: "to/IN" },
            Realization { predicate: &["signed/VBD/sign", "signs/VBZ/sign"], lead: "with/IN" },
        ],
        objects: &["Harbor Rowing Club", "Civic Chess Society", "Granite Choir", "Alder Cycling Club", "Meridian Guild", "Lakeside Drama Circle"],
        object_ner: NerType::Org,
        kb_prefix: "Q7",
    },
];

/// Verbs unrelated to any planted relation, with the pool their object comes from.
const DISTRACTORS: &[(&str, usize)] = &[("visited/VBD/visit", 0), ("praised/VBD/praise", 2), ("met/VBD/meet", 3), ("admired/VBD/admire", 4), ("left/VBD/leave", 1)];

const FIRST_NAMES: &[(&str, bool)] = &[
    ("Anna", true),
    ("Boris", false),
    ("Clara", true),
    ("Daniel", false),
    ("Edith", true),
    ("Filip", false),
    ("Greta", true),
    ("Hugo", false),
    ("Ilse", true),
    ("Jakob", false),
    ("Karin", true),
    ("Lukas", false),
];
const LAST_NAMES: &[&str] = &["Berg", "Dahl", "Falk", "Hagen", "Kovac", "Lund", "Morel", "Navarro", "Olsen", "Petrov", "Quist", "Rossi", "Sand", "Thorne"];
const OCCUPATIONS: &[&str] = &["writer", "chemist", "painter", "architect", "engineer", "historian"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub documents: usize,
    pub seed: u64,
    /// Chance that a relation sentence uses a pronoun subject.
    pub pronoun_rate: f64,
    /// Chance that two relation facts share one sentence.
    pub compound_rate: f64,
    /// Expected distractor sentences per document.
    pub distractor_rate: f64,
    /// Assign fold `doc_index % folds` to every gold fact.
    pub folds: Option<u32>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            documents: 100,
            seed: 7,
            pronoun_rate: 0.3,
            compound_rate: 0.2,
            distractor_rate: 1.0,
            folds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub records: Vec<AnnotatedDocumentRecord>,
    pub gold: Vec<GoldFact>,
    pub specs: Vec<RelationSpec>,
}

impl SynthCorpus {
    pub fn sentence_count(&self) -> usize {
        self.records.iter().map(|r| r.sentences.len()).sum()
    }

    /// Write `corpus.jsonl`, `gold.tsv` and `relations.tsv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), TsvError> {
        std::fs::create_dir_all(dir).map_err(|source| TsvError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let corpus: String = self.records.iter().map(|r| r.to_line() + "\n").collect();
        tsv::write_file(&dir.join("corpus.jsonl"), &corpus)?;
        tsv::write_file(&dir.join("gold.tsv"), &format_gold(&self.gold))?;
        tsv::write_file(&dir.join("relations.tsv"), &format_relation_specs(&self.specs))
    }
}

pub fn relation_specs() -> Vec<RelationSpec> {
    RELATIONS
        .iter()
        .map(|r| RelationSpec {
            relation_id: r.id.to_string(),
            display_name: r.display.to_string(),
            synonyms: r.synonyms.iter().map(|s| s.to_string()).collect(),
        })
        .collect()
}

/// Tagged tokens of a sentence under construction.
#[derive(Default)]
struct Tokens(Vec<String>);

impl Tokens {
    fn push(&mut self, tagged: &str) -> Range<usize> {
        let start = self.0.len();
        self.0.extend(tagged.split_whitespace().map(str::to_string));
        start..self.0.len()
    }

    fn name(&mut self, name: &str) -> Range<usize> {
        let tagged: Vec<String> = name.split_whitespace().map(|w| format!("{w}/NNP")).collect();
        self.push(&tagged.join(" "))
    }
}

struct Fact {
    rel: usize,
    object: usize,
}

/// One predicate and object after a subject: spans relative to `t`.
struct Phrase {
    predicate: Range<usize>,
    object_span: Range<usize>,
    object_name: Range<usize>,
}

fn object_kb(rel: usize, object: usize) -> String {
    format!("{}{:03}", RELATIONS[rel].kb_prefix, object)
}

fn push_phrase(t: &mut Tokens, rng: &mut ChaCha8Rng, fact: &Fact) -> Phrase {
    let rel = &RELATIONS[fact.rel];
    let real = rel.realizations.choose(rng).expect("realizations");
    let predicate = t.push(real.predicate.choose(rng).expect("forms"));
    let lead = t.push(real.lead);
    let object_name = t.name(rel.objects[fact.object]);
    Phrase {
        predicate,
        object_span: lead.start..object_name.end,
        object_name,
    }
}

/// Generate `config.documents` biographies. Every document opens with an
/// introduction, then states each planted fact once, possibly with a pronoun
/// subject or two facts in one sentence, plus distractor sentences with
/// unrelated verbs and no gold label.
pub fn generate(config: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut records = Vec::new();
    let mut gold = Vec::new();
    for d in 0..config.documents {
        let (first, female) = FIRST_NAMES[d % FIRST_NAMES.len()];
        let last = LAST_NAMES[(d / FIRST_NAMES.len() + d) % LAST_NAMES.len()];
        let name = format!("{first} {last}");
        let person_kb = format!("Q1{d:04}");
        let external_id = format!("syn{d:04}");
        let pronoun = if female { "She/PRP/she" } else { "He/PRP/he" };
        let mut b = DocBuilder::new(&external_id, &name);

        let mut t = Tokens::default();
        let subj = t.name(&name);
        let verb = t.push("is/VBZ/be");
        let occ = t.push(&format!("a/DT {}/NN", OCCUPATIONS.choose(&mut rng).expect("occupations")));
        t.push("./.");
        let intro = b.sentence(&t.0.join(" "));
        b.clause(intro, subj.clone(), verb, Some(occ), &[]);
        b.mention(intro, subj.clone(), NerType::Per, Some(&person_kb));
        let antecedent = subj;

        let mut facts: Vec<Fact> = (0..RELATIONS.len())
            .map(|rel| Fact {
                rel,
                object: rng.gen_range(0..RELATIONS[rel].objects.len()),
            })
            .collect();
        facts.shuffle(&mut rng);
        let mut groups: Vec<Vec<Fact>> = Vec::new();
        for f in facts {
            match groups.last_mut() {
                Some(g) if g.len() == 1 && rng.gen_bool(config.compound_rate) => g.push(f),
                _ => groups.push(vec![f]),
            }
        }
        let distractors = (0..3).filter(|_| rng.gen_bool(config.distractor_rate / 3.0)).count();
        let mut kinds: Vec<Option<Vec<Fact>>> = groups.into_iter().map(Some).chain((0..distractors).map(|_| None)).collect();
        kinds.shuffle(&mut rng);

        for kind in kinds {
            let mut t = Tokens::default();
            let use_pronoun = rng.gen_bool(config.pronoun_rate);
            let subj = if use_pronoun { t.push(pronoun) } else { t.name(&name) };
            // (gold relation, object pool, object index, spans)
            let mut phrases: Vec<(Option<usize>, usize, usize, Phrase)> = Vec::new();
            match kind {
                Some(group) => {
                    for (i, f) in group.iter().enumerate() {
                        if i > 0 {
                            t.push("and/CC");
                        }
                        let p = push_phrase(&mut t, &mut rng, f);
                        phrases.push((Some(f.rel), f.rel, f.object, p));
                    }
                }
                None => {
                    let &(verb, pool) = DISTRACTORS.choose(&mut rng).expect("distractors");
                    let object = rng.gen_range(0..RELATIONS[pool].objects.len());
                    let predicate = t.push(verb);
                    let object_name = t.name(RELATIONS[pool].objects[object]);
                    let p = Phrase {
                        predicate,
                        object_span: object_name.clone(),
                        object_name,
                    };
                    phrases.push((None, pool, object, p));
                }
            }
            t.push("./.");
            let s = b.sentence(&t.0.join(" "));
            if use_pronoun {
                b.mention(s, subj.clone(), NerType::Per, None);
                b.coref(s, subj.clone(), intro, antecedent.clone());
            } else {
                b.mention(s, subj.clone(), NerType::Per, Some(&person_kb));
            }
            for (rel, pool, object, p) in phrases {
                b.clause(s, subj.clone(), p.predicate, Some(p.object_span), &[]);
                b.mention(s, p.object_name.clone(), RELATIONS[pool].object_ner, Some(&object_kb(pool, object)));
                if let Some(rel) = rel {
                    gold.push(GoldFact {
                        sentence_id: format!("{external_id}#{s}"),
                        subject_span: b.span(s, subj.clone()),
                        object_span: b.span(s, p.object_name),
                        relation_id: RELATIONS[rel].id.to_string(),
                        fold: config.folds.map(|k| d as u32 % k),
                    });
                }
            }
        }
        records.push(b.build());
    }
    SynthCorpus {
        records,
        gold,
        specs: relation_specs(),
    }
}

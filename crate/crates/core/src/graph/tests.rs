use super::*;

fn doc(g: &mut Graph, id: &str, text: &str) -> VertexId {
    g.add_document(
        DocumentProps {
            title: id.to_string(),
            external_id: id.to_string(),
            ..Default::default()
        },
        text,
    )
    .unwrap()
}

fn span_of(text: &str, needle: &str) -> Span {
    let start = text.find(needle).unwrap();
    Span::new(start, start + needle.len())
}

fn sentence(g: &mut Graph, d: VertexId, idx: u32, text: &str, sent: &str) -> VertexId {
    g.attach_sentence(
        d,
        SentenceProps {
            text: sent.to_string(),
            index_in_doc: idx,
            char_span: span_of(text, sent),
            tokens: Vec::new(),
        },
    )
    .unwrap()
}

fn clause(g: &mut Graph, s: VertexId, text: &str, subj: &str, pred: &str, obj: Option<&str>) -> VertexId {
    let idx = g.sentence_clauses(s).len() as u32;
    g.attach_clause(
        s,
        ClauseProps {
            subject_span: span_of(text, subj),
            predicate_text: pred.to_string(),
            predicate_token_indices: Vec::new(),
            object_span: obj.map(|o| span_of(text, o)),
            adverbial_spans: Vec::new(),
            index_in_sentence: idx,
        },
    )
    .unwrap()
}

fn mention(g: &mut Graph, c: VertexId, text: &str, surface: &str, role: SyntacticRole) -> VertexId {
    g.attach_mention(
        c,
        MentionProps {
            surface: surface.to_string(),
            char_span: span_of(text, surface),
            pos: "NNP".into(),
            lemma: surface.to_lowercase(),
            syntactic_role: role,
            ner_type: NerType::Per,
            source_annotator: "test".into(),
        },
    )
    .unwrap()
}

const BIRCH: &str = "Thora Birch is an American actress. She played Jane Burnham in American Beauty.";
const BEAUTY: &str = "American Beauty is a 1999 drama film. Sam Mendes directed American Beauty.";
const MENDES: &str = "Sam Mendes is an English director. He won an award for American Beauty.";

/// Three articles linked through shared entities.
fn three_articles() -> (Graph, VertexId, VertexId) {
    let mut g = Graph::new();

    let d = doc(&mut g, "thora_birch", BIRCH);
    let s0 = sentence(&mut g, d, 0, BIRCH, "Thora Birch is an American actress.");
    let c0 = clause(&mut g, s0, BIRCH, "Thora Birch", "is", Some("an American actress"));
    let birch = mention(&mut g, c0, BIRCH, "Thora Birch", SyntacticRole::Subject);
    g.link_entity(birch, "Q200566", "Thora Birch").unwrap();
    let s1 = sentence(&mut g, d, 1, BIRCH, "She played Jane Burnham in American Beauty.");
    let played = clause(&mut g, s1, BIRCH, "She", "played", Some("Jane Burnham"));
    let she = mention(&mut g, played, BIRCH, "She", SyntacticRole::Subject);
    let jane = mention(&mut g, played, BIRCH, "Jane Burnham", SyntacticRole::Object);
    let ab = mention(&mut g, played, BIRCH, "American Beauty", SyntacticRole::Other);
    g.link_entity(jane, "Q_jane_burnham", "Jane Burnham").unwrap();
    g.link_entity(ab, "Q208910", "American Beauty").unwrap();
    g.add_coref_link(she, birch).unwrap();

    let d = doc(&mut g, "american_beauty", BEAUTY);
    let s0 = sentence(&mut g, d, 0, BEAUTY, "American Beauty is a 1999 drama film.");
    clause(&mut g, s0, BEAUTY, "American Beauty", "is", Some("a 1999 drama film"));
    let s1 = sentence(&mut g, d, 1, BEAUTY, "Sam Mendes directed American Beauty.");
    let directed = clause(&mut g, s1, BEAUTY, "Sam Mendes", "directed", Some("American Beauty."));
    let sm = mention(&mut g, directed, BEAUTY, "Sam Mendes", SyntacticRole::Subject);
    let text_ab = &BEAUTY[BEAUTY.rfind("American Beauty").unwrap()..];
    let ab_span = Span::new(BEAUTY.rfind("American Beauty").unwrap(), BEAUTY.rfind("American Beauty").unwrap() + 15);
    assert!(text_ab.starts_with("American Beauty"));
    let ab2 = g
        .attach_mention(
            directed,
            MentionProps {
                surface: "American Beauty".into(),
                char_span: ab_span,
                pos: "NNP".into(),
                lemma: "american beauty".into(),
                syntactic_role: SyntacticRole::Object,
                ner_type: NerType::Misc,
                source_annotator: "test".into(),
            },
        )
        .unwrap();
    g.link_entity(sm, "Q223687", "Sam Mendes").unwrap();
    g.link_entity(ab2, "Q208910", "American Beauty").unwrap();

    let d = doc(&mut g, "sam_mendes", MENDES);
    let s0 = sentence(&mut g, d, 0, MENDES, "Sam Mendes is an English director.");
    clause(&mut g, s0, MENDES, "Sam Mendes", "is", Some("an English director"));
    let s1 = sentence(&mut g, d, 1, MENDES, "He won an award for American Beauty.");
    let won = clause(&mut g, s1, MENDES, "He", "won", Some("an award"));
    let he = mention(&mut g, won, MENDES, "He", SyntacticRole::Subject);
    let ab3 = mention(&mut g, won, MENDES, "American Beauty", SyntacticRole::Object);
    g.link_entity(ab3, "Q208910", "American Beauty").unwrap();
    // "He" is deliberately left without a coreference link.
    let _ = he;

    (g, played, directed)
}

#[test]
fn empty_graph_has_zero_stats() {
    assert_eq!(Graph::new().stats(), GraphStats::default());
}

#[test]
fn single_document_counts() {
    let mut g = Graph::new();
    doc(&mut g, "a", "Some text.");
    assert_eq!(
        g.stats(),
        GraphStats {
            documents: 1,
            ..Default::default()
        }
    );
}

#[test]
fn duplicate_external_id_is_rejected() {
    let mut g = Graph::new();
    doc(&mut g, "a", "x");
    let err = g
        .add_document(
            DocumentProps {
                external_id: "a".into(),
                ..Default::default()
            },
            "y",
        )
        .unwrap_err();
    assert_eq!(err, GraphError::DuplicateDocument("a".into()));
}

#[test]
fn hierarchy_counts_and_edges() {
    let text = "Bridget Harrison married Dimitri Doganis.";
    let mut g = Graph::new();
    let d = doc(&mut g, "d", text);
    let s = sentence(&mut g, d, 0, text, text);
    let c = clause(&mut g, s, text, "Bridget Harrison", "married", Some("Dimitri Doganis"));
    mention(&mut g, c, text, "Bridget Harrison", SyntacticRole::Subject);
    mention(&mut g, c, text, "Dimitri Doganis", SyntacticRole::Object);
    let st = g.stats();
    assert_eq!((st.sentences, st.clauses, st.mentions), (1, 1, 2));
    assert_eq!(g.edges().len(), 4);
    assert_eq!(g.sentence_key(s).as_deref(), Some("d#0"));
    assert_eq!(g.clause_key(c).as_deref(), Some("d#0#0"));
    assert_eq!(g.sentence_by_key("d#0"), Some(s));
}

#[test]
fn mention_surface_must_match_text() {
    let text = "Bridget Harrison married Dimitri Doganis.";
    let mut g = Graph::new();
    let d = doc(&mut g, "d", text);
    let s = sentence(&mut g, d, 0, text, text);
    let c = clause(&mut g, s, text, "Bridget Harrison", "married", None);
    let err = g
        .attach_mention(
            c,
            MentionProps {
                surface: "Bridget Harrisom".into(),
                char_span: Span::new(0, 16),
                pos: "NNP".into(),
                lemma: String::new(),
                syntactic_role: SyntacticRole::Subject,
                ner_type: NerType::Per,
                source_annotator: "a".into(),
            },
        )
        .unwrap_err();
    assert!(matches!(err, GraphError::SpanMismatch { what: "mention", .. }));
}

#[test]
fn intransitive_clause_is_accepted() {
    let text = "Sandman died.";
    let mut g = Graph::new();
    let d = doc(&mut g, "d", text);
    let s = sentence(&mut g, d, 0, text, text);
    let c = clause(&mut g, s, text, "Sandman", "died", None);
    assert_eq!(g.clause(c).unwrap().object_span, None);
}

#[test]
fn spans_are_validated() {
    let text = "Alpha beta. Gamma delta.";
    let mut g = Graph::new();
    let d = doc(&mut g, "d", text);
    let bad = SentenceProps {
        text: "Alpha beta. Gamma delta. x".into(),
        index_in_doc: 0,
        char_span: Span::new(0, 26),
        tokens: Vec::new(),
    };
    assert!(matches!(g.attach_sentence(d, bad), Err(GraphError::SpanOutOfBounds { .. })));
    sentence(&mut g, d, 0, text, "Alpha beta.");
    let overlapping = SentenceProps {
        text: "beta. Gamma".into(),
        index_in_doc: 1,
        char_span: span_of(text, "beta. Gamma"),
        tokens: Vec::new(),
    };
    assert!(matches!(g.attach_sentence(d, overlapping), Err(GraphError::SentenceOverlap { .. })));
    let s1 = sentence(&mut g, d, 1, text, "Gamma delta.");
    let outside = ClauseProps {
        subject_span: span_of(text, "Alpha"),
        predicate_text: "delta".into(),
        predicate_token_indices: vec![],
        object_span: None,
        adverbial_spans: vec![],
        index_in_sentence: 0,
    };
    assert!(matches!(g.attach_clause(s1, outside), Err(GraphError::SpanOutOfBounds { what: "subject", .. })));
    let empty_pred = ClauseProps {
        subject_span: span_of(text, "Gamma"),
        predicate_text: " ".into(),
        predicate_token_indices: vec![],
        object_span: None,
        adverbial_spans: vec![],
        index_in_sentence: 0,
    };
    assert_eq!(g.attach_clause(s1, empty_pred), Err(GraphError::EmptyPredicate));
    assert!(matches!(
        g.attach_clause(VertexId::sentence(9), ClauseProps {
            subject_span: Span::new(0, 1),
            predicate_text: "x".into(),
            predicate_token_indices: vec![],
            object_span: None,
            adverbial_spans: vec![],
            index_in_sentence: 0,
        }),
        Err(GraphError::MissingVertex(_))
    ));
    assert!(matches!(
        g.attach_clause(d, ClauseProps {
            subject_span: Span::new(0, 1),
            predicate_text: "x".into(),
            predicate_token_indices: vec![],
            object_span: None,
            adverbial_spans: vec![],
            index_in_sentence: 0,
        }),
        Err(GraphError::WrongKind { .. })
    ));
}

#[test]
fn entity_dedup_across_documents() {
    let (g, _, _) = three_articles();
    let ab = g.entity_by_kb_id("Q208910").unwrap();
    let linked = g.entity_mentions(ab);
    assert_eq!(linked.len(), 3);
    let docs: BTreeSet<_> = linked
        .iter()
        .map(|&m| {
            let c = g.mention_clause(m).unwrap();
            g.sentence_document(g.clause_sentence(c).unwrap()).unwrap()
        })
        .collect();
    assert_eq!(docs.len(), 3, "American Beauty relates the three articles");
    assert_eq!(g.stats().documents, 3);
}

#[test]
fn two_mentions_one_entity() {
    let a = "Kevin Spacey starred.";
    let b = "Kevin Spacey won.";
    let mut g = Graph::new();
    let mut ms = Vec::new();
    for (id, text, pred) in [("a", a, "starred"), ("b", b, "won")] {
        let d = doc(&mut g, id, text);
        let s = sentence(&mut g, d, 0, text, text);
        let c = clause(&mut g, s, text, "Kevin Spacey", pred, None);
        ms.push(mention(&mut g, c, text, "Kevin Spacey", SyntacticRole::Subject));
    }
    assert_eq!(g.stats().entities, 0);
    for &m in &ms {
        g.link_entity(m, "Q146599", "Kevin Spacey").unwrap();
    }
    assert_eq!(g.stats().entities, 1);
    let e = g.entity_by_kb_id("Q146599").unwrap();
    let indegree = g
        .edges()
        .iter()
        .filter(|e2| e2.dst == e && e2.kind == EdgeKind::MentionRefersToEntity)
        .count();
    assert_eq!(indegree, 2);
    // relinking to the same entity is a no-op; to another one is an error
    assert_eq!(g.link_entity(ms[0], "Q146599", "Kevin Spacey").unwrap(), e);
    assert!(matches!(
        g.link_entity(ms[0], "Q1", "Other"),
        Err(GraphError::MentionAlreadyLinked { .. })
    ));
}

#[test]
fn coref_links_are_canonical() {
    let (mut g, played, _) = three_articles();
    let she = g.clause_role_mentions(played, SyntacticRole::Subject)[0];
    let birch = VertexId::mention(0);
    let before = g.edges().len();
    let e1 = g.add_coref_link(birch, she).unwrap();
    assert_eq!(g.edges().len(), before, "already linked in the fixture");
    assert_eq!((e1.src, e1.dst), (birch, she));
    assert_eq!(g.add_coref_link(she, she), Err(GraphError::SelfLink(she)));
    assert!(matches!(
        g.add_coref_link(she, VertexId::clause(0)),
        Err(GraphError::WrongKind { .. })
    ));
    assert_eq!(g.coref_cluster(she), BTreeSet::from([birch, she]));
}

#[test]
fn fact_subgraph_resolves_pronoun_subject() {
    let (g, played, directed) = three_articles();
    let facts = g.fact_subgraph(None);
    let clauses: Vec<_> = facts.iter().map(|f| f.clause).collect();
    assert_eq!(clauses, vec![played, directed]);
    let f = &facts[0];
    assert_eq!(f.predicate, "played");
    assert_eq!(g.entity(f.subject_entity).unwrap().kb_id, "Q200566");
    let r = g.resolve_mention(f.subject_mention).unwrap();
    assert!(r.via_coref);
    // "He won ..." has no coref link, so its subject does not resolve
    assert!(facts.iter().all(|f| g.mention(f.subject_mention).unwrap().surface != "He"));
}

#[test]
fn fact_subgraph_filter_matches_brute_force() {
    let (g, _, _) = three_articles();
    let filter = HashSet::from(["Q208910".to_string()]);
    let got: BTreeSet<VertexId> = g.fact_subgraph(Some(&filter)).iter().map(|f| f.clause).collect();

    // independent scan: clauses with a subject and an object mention both
    // resolvable where one of the two resolved entities is American Beauty
    let mut want = BTreeSet::new();
    for c in g.clause_ids() {
        let mut subj = None;
        let mut obj = None;
        for m in g.clause_mentions(c) {
            let p = g.mention(m).unwrap();
            let direct = g.mention_entity(m);
            let hop = g.coref_neighbors(m).into_iter().find_map(|n| g.mention_entity(n));
            let Some(e) = direct.or(hop) else { continue };
            match p.syntactic_role {
                SyntacticRole::Subject if subj.is_none() => subj = Some(e),
                SyntacticRole::Object if obj.is_none() => obj = Some(e),
                _ => {}
            }
        }
        if let (Some(s), Some(o)) = (subj, obj) {
            if [s, o].iter().any(|&e| g.entity(e).unwrap().kb_id == "Q208910") {
                want.insert(c);
            }
        }
    }
    assert_eq!(got, want);
    assert_eq!(got.len(), 1);
}

#[test]
fn unlinked_object_excluded() {
    let text = "Bridget Harrison married Dimitri Doganis.";
    let mut g = Graph::new();
    let d = doc(&mut g, "d", text);
    let s = sentence(&mut g, d, 0, text, text);
    let c = clause(&mut g, s, text, "Bridget Harrison", "married", Some("Dimitri Doganis"));
    let bh = mention(&mut g, c, text, "Bridget Harrison", SyntacticRole::Subject);
    mention(&mut g, c, text, "Dimitri Doganis", SyntacticRole::Object);
    g.link_entity(bh, "Q1", "Bridget Harrison").unwrap();
    assert!(g.fact_subgraph(None).is_empty());
}

#[test]
fn two_documents_five_sentences_seven_clauses() {
    let a = "A1 x. A2 y. A3 z.";
    let b = "B1 p. B2 q.";
    let mut g = Graph::new();
    let da = doc(&mut g, "a", a);
    let db = doc(&mut g, "b", b);
    let mut n = 0;
    for (d, text, sents, per) in [(da, a, vec!["A1 x.", "A2 y.", "A3 z."], vec![1, 2, 1]), (db, b, vec!["B1 p.", "B2 q."], vec![2, 1])] {
        for (i, (st, k)) in sents.iter().zip(per).enumerate() {
            let s = sentence(&mut g, d, i as u32, text, st);
            for _ in 0..k {
                let subj = &st[..2];
                clause(&mut g, s, text, subj, "x", None);
                n += 1;
            }
        }
    }
    assert_eq!(n, 7);
    let st = g.stats();
    assert_eq!((st.documents, st.sentences, st.clauses), (2, 5, 7));
}

#[test]
fn frozen_graph_rejects_writes() {
    let (mut g, _, _) = three_articles();
    g.freeze();
    assert_eq!(
        g.add_document(DocumentProps::default(), "").unwrap_err(),
        GraphError::Frozen
    );
    assert_eq!(g.add_coref_link(VertexId::mention(0), VertexId::mention(1)).unwrap_err(), GraphError::Frozen);
    // reads still work from other threads
    std::thread::scope(|s| {
        s.spawn(|| assert_eq!(g.fact_subgraph(None).len(), 2));
    });
}

#[test]
fn snapshot_roundtrip() {
    let (g, _, _) = three_articles();
    let dir = tempfile::tempdir().unwrap();
    write_snapshot(&g, dir.path()).unwrap();
    let back = read_snapshot(dir.path()).unwrap();
    assert_eq!(back.stats(), g.stats());
    let sorted = |g: &Graph| {
        let mut e = g.edges().to_vec();
        e.sort();
        e
    };
    assert_eq!(sorted(&back), sorted(&g));
    assert_eq!(back.fact_subgraph(None), g.fact_subgraph(None));
    for m in g.mention_ids() {
        assert_eq!(back.mention(m), g.mention(m));
    }
    // writing the reloaded graph gives identical bytes
    let dir2 = tempfile::tempdir().unwrap();
    write_snapshot(&back, dir2.path()).unwrap();
    for f in ["documents.tsv", "clauses.tsv", "mentions.tsv", "edges.tsv"] {
        assert_eq!(
            std::fs::read(dir.path().join(f)).unwrap(),
            std::fs::read(dir2.path().join(f)).unwrap()
        );
    }
}

#[test]
fn corrupt_snapshot_fails_with_line() {
    let (g, _, _) = three_articles();
    let dir = tempfile::tempdir().unwrap();
    write_snapshot(&g, dir.path()).unwrap();
    let path = dir.path().join("mentions.tsv");
    let text = std::fs::read_to_string(&path).unwrap().replacen("Thora Birch", "Thora Bitch", 1);
    std::fs::write(&path, text).unwrap();
    let err = read_snapshot(dir.path()).unwrap_err();
    assert!(matches!(err, SnapshotError::Graph { line: 1, .. }), "{err}");
}

mod common;

use common::fixture;
use proofgraph::graph::{Direction, GraphStore};
use proofgraph::ingest::{build_corpus_from_path, clean_wikitext, normalize_title, write_corpus};
use proofgraph::model::RelType;
use proptest::prelude::*;

fn ingest_into(dir: &std::path::Path) {
    let corpus = build_corpus_from_path(fixture("dump/proofwiki_sample.xml")).unwrap();
    write_corpus(&corpus, dir).unwrap();
}

#[test]
fn fixture_dump_matches_golden_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ingest_into(a.path());
    ingest_into(b.path());
    for file in ["nodes.jsonl", "edges.csv", "stats.json"] {
        let got = std::fs::read(a.path().join(file)).unwrap();
        assert_eq!(got, std::fs::read(b.path().join(file)).unwrap(), "{file} differs between runs");
        assert_eq!(got, std::fs::read(fixture("golden/ingest").join(file)).unwrap(), "{file} differs from golden");
    }
}

#[test]
fn fixture_graph_shape() {
    let store = GraphStore::load_dir(&fixture("graph")).unwrap();
    let stats = store.stats();
    assert_eq!((stats.node_count, stats.edge_count), (10, 16));
    assert_eq!(stats.per_type[&RelType::UsesDefinition], 6);
    assert_eq!(store.dimension(), Some(8));
    assert!(store.fully_embedded());
    // Lagrange's Theorem/Proof 1 depends on the theorem and cites two definitions.
    let out: Vec<u64> = store.neighbors(5, Direction::Out, None).unwrap().iter().map(|(n, _)| n.id).collect();
    assert_eq!(out, vec![1, 4, 6, 7]);
    let deps = store.neighbors(5, Direction::Out, Some(&[RelType::ProofDependency])).unwrap();
    assert_eq!(deps.len(), 1);
    assert_eq!(deps[0].0.title, "Lagrange's Theorem");
}

#[test]
fn store_round_trips_through_csv_and_sidecar() {
    for seed in 0..30 {
        let g = common::random_graph(seed, 40, 8);
        let dir = tempfile::tempdir().unwrap();
        g.store.export_dir(dir.path()).unwrap();
        let back = GraphStore::load_dir(dir.path()).unwrap();
        assert!(back.same_graph(&g.store), "seed {seed}");
        for (id, v) in g.store.embeddings() {
            assert_eq!(back.embedding(id).unwrap(), v);
        }
    }
}

fn wikitext() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        "[a-z ]{0,12}",
        Just("[[Definition:Group|group]]".to_string()),
        Just("[[Subgroup]]".to_string()),
        Just("{{Proof}}".to_string()),
        Just("{{Link|a|{{b}}}}".to_string()),
        Just("'''bold''' ''it''".to_string()),
        Just("<ref>note</ref>".to_string()),
        Just("$x^{2}$".to_string()),
        Just(":<math>a \\cdot b</math>".to_string()),
        Just("== Proof ==\n".to_string()),
        Just("<!-- c -->".to_string()),
        Just("\n\n\n".to_string()),
        Just("[[Category:Groups]]".to_string()),
        Just("{{".to_string()),
        Just("]]".to_string()),
    ];
    prop::collection::vec(piece, 0..12).prop_map(|v| v.concat())
}

proptest! {
    #[test]
    fn cleaning_is_idempotent(raw in wikitext()) {
        let once = clean_wikitext(&raw);
        prop_assert_eq!(clean_wikitext(&once), once);
    }

    #[test]
    fn title_normalization_is_idempotent(t in "[A-Za-z_ :']{0,20}") {
        let n = normalize_title(&t);
        prop_assert_eq!(normalize_title(&n), n.clone());
        prop_assert!(!n.contains('_') && !n.contains("  "));
    }
}

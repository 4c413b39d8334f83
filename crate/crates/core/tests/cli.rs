mod common;

use std::process::Command;

use common::fixture;
use proofgraph::cli::{run_to, EXIT_CONFIG, EXIT_OK};

fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = run_to(std::iter::once("proofgraph").chain(args.iter().copied()), &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn p(rel: &str) -> String {
    fixture(rel).display().to_string()
}

#[test]
fn bench_with_mocks_writes_report() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().display().to_string();
    let (code, text) = run(&[
        "bench", "--graph", &p("graph"), "--dataset", &p("bench/problems.jsonl"), "--method", "graph",
        "--mock-dir", &p("mock"), "--out", &dir,
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(text.contains("11/20 verified (55.00%)"));
    assert_eq!(
        std::fs::read_to_string(out.path().join("report.json")).unwrap(),
        std::fs::read_to_string(fixture("golden/bench/graph/report.json")).unwrap()
    );
    assert_eq!(std::fs::read_to_string(out.path().join("traces.jsonl")).unwrap().lines().count(), 20);
}

#[test]
fn prove_without_graph_dir_is_a_config_error() {
    let (code, _) = run(&["prove", "--graph", "/no/such/graph", "--problem", &p("bench/lagrange.json"), "--mock-dir", &p("mock")]);
    assert_eq!(code, EXIT_CONFIG);
    let (code, _) = run(&["prove", "--problem", &p("bench/lagrange.json"), "--method", "rag", "--mock-dir", &p("mock")]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn prove_prints_the_outcome() {
    let (code, text) = run(&[
        "prove", "--graph", &p("graph"), "--problem", &p("bench/problems.jsonl"), "--name", "coset_card_eq",
        "--method", "graph", "--r", "3", "--d", "2", "--k", "5", "--mock-dir", &p("mock"),
    ]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["status"], "verified");
    assert_eq!(v["winning_attempt"], 2);
}

#[test]
fn query_lists_titles_by_descending_score() {
    let (code, text) = run(&[
        "query", "--graph", &p("graph"), "--text", "order of a subgroup divides the order of the group", "--k", "3",
        "--d", "1", "--config", &p("services/hashing.json"),
    ]);
    assert_eq!(code, EXIT_OK);
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 6);
    let scores: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(rows[0][3], "Definition:Order of Structure");
}

#[test]
fn ingest_then_embed_reproduces_fixture_graph() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().display().to_string();
    assert_eq!(run(&["ingest", "--xml", &p("dump/proofwiki_sample.xml"), "--out", &dir]).0, EXIT_OK);
    assert_eq!(run(&["embed", "--graph", &dir, "--provider", &p("services/hashing.json")]).0, EXIT_OK);
    for f in ["nodes.jsonl", "edges.csv", "embeddings.bin"] {
        assert_eq!(std::fs::read(out.path().join(f)).unwrap(), std::fs::read(fixture("graph").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn search_commands_run_on_mocks() {
    let (code, text) = run(&[
        "tree-search", "--beam", "2", "--depth", "3", "--graph", &p("graph"), "--problem", &p("bench/lagrange.json"),
        "--mock-dir", &p("mock_search"),
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(text, std::fs::read_to_string(fixture("golden/search/tree_search.json")).unwrap());

    let (code, text) = run(&[
        "best-of-n", "--n", "2", "--graph", &p("graph"), "--problem", &p("bench/lagrange.json"), "--mock-dir",
        &p("mock_search"),
    ]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["best"]["index"], 2);
    assert_eq!(v["best"]["judge_score"], 7);
}

#[test]
fn binary_reports_usage_errors() {
    let status = Command::new(env!("CARGO_BIN_EXE_proofgraph")).arg("--no-such-flag").output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("Usage"));
}

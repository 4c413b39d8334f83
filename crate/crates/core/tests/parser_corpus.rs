mod common;

use proofgraph::gateway::{extract_lean_block, parse_judge_score};
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    name: String,
    kind: String,
    input: String,
    #[serde(default)]
    expected: Option<String>,
    #[serde(default)]
    score: Option<u8>,
    #[serde(default)]
    warning: bool,
    #[serde(default)]
    justification: Option<String>,
}

fn load_cases() -> Vec<Case> {
    std::fs::read_to_string(common::fixture("parser/corpus.jsonl"))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn golden_response_shapes() {
    let cases = load_cases();
    assert!(cases.len() >= 12);
    for c in cases {
        match c.kind.as_str() {
            "lean" => assert_eq!(extract_lean_block(&c.input).ok(), c.expected, "{}", c.name),
            "score" => {
                let got = parse_judge_score(&c.input).ok();
                assert_eq!(got.as_ref().map(|s| s.score), c.score, "{}", c.name);
                if let Some(s) = got {
                    assert_eq!(s.warning.is_some(), c.warning, "{}", c.name);
                    if let Some(j) = &c.justification {
                        assert_eq!(&s.justification, j, "{}", c.name);
                    }
                }
            }
            other => panic!("unknown case kind {other}"),
        }
    }
}
